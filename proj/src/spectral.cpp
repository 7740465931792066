#include "bslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "bslab/csv.hpp"
#include "bslab/errors.hpp"
#include "bslab/linalg.hpp"

namespace bslab {

namespace {

using Cmat = Eigen::MatrixXcd;

bool sorted_desc_by_abs(double a, double b) {
    const double fa = std::abs(a), fb = std::abs(b);
    if (fa != fb) return fa > fb;
    return a > b;
}

// Deterministic uniform in [0,1) from raw mt19937_64 bits.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

const char* sign_part_name(SignPart s) {
    switch (s) {
        case SignPart::all: return "all";
        case SignPart::plus: return "plus";
        case SignPart::minus: return "minus";
    }
    return "all";
}

SandwichMatrix sandwich(const SqrtFactor& g, const MatrixWeightField& v,
                        const DiscreteMeasure& mu) {
    const int k = mu.size();
    if (g.dim() != k) throw invalid_parameter("sandwich: factor dimension != atom count");
    if (v.m < 1) throw invalid_parameter("sandwich: weight size must be >= 1");

    const int m = v.m;
    std::vector<Cmat> vals;
    vals.reserve(k);
    bool real_entries = true;
    for (const Atom& a : mu.atoms) {
        Cmat w = v.eval(a.point);
        if (w.rows() != m || w.cols() != m)
            throw invalid_parameter("sandwich: eval returned wrong matrix size");
        if (real_entries && w.imag().cwiseAbs().maxCoeff() != 0.0) real_entries = false;
        vals.push_back(std::move(w));
    }

    SandwichMatrix s;
    s.K = k;
    s.m = m;
    s.hermitian_flag = v.hermitian_flag;
    s.real_entries = real_entries;
    s.entries.resize(k * m, k * m);

    // One dense K x K product per (a, b) block index pair.
    Eigen::VectorXd diag_re(k);
    Eigen::VectorXd diag_im(k);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            for (int i = 0; i < k; ++i) {
                diag_re(i) = vals[i](a, b).real();
                diag_im(i) = vals[i](a, b).imag();
            }
            Eigen::MatrixXd re = g.entries * diag_re.asDiagonal() * g.entries;
            Eigen::MatrixXd im;
            if (!real_entries) im = g.entries * diag_im.asDiagonal() * g.entries;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    s.entries(i * m + a, j * m + b) =
                        real_entries ? std::complex<double>(re(i, j), 0.0)
                                     : std::complex<double>(re(i, j), im(i, j));
        }
    return s;
}

SpectralResult make_spectral_result(SpectrumKind kind, std::vector<double> values, int k, int m) {
    SpectralResult r;
    r.kind = kind;
    r.values = std::move(values);
    std::sort(r.values.begin(), r.values.end(), sorted_desc_by_abs);
    r.K = k;
    r.m = m;
    return r;
}

SpectralResult signed_spectrum(const SandwichMatrix& s) {
    if (!s.hermitian_flag)
        throw invalid_parameter("signed_spectrum: weight is not Hermitian; use singular_spectrum");
    Eigen::VectorXd lam;
    if (s.real_entries)
        lam = linalg::sym_eigvalues(s.entries.real());
    else
        lam = linalg::herm_eigvalues(s.entries);
    return make_spectral_result(SpectrumKind::signed_eigenvalues,
                                {lam.data(), lam.data() + lam.size()}, s.K, s.m);
}

SpectralResult singular_spectrum(const SandwichMatrix& s) {
    Eigen::VectorXd sv;
    if (s.real_entries)
        sv = linalg::singular_values(Eigen::MatrixXd(s.entries.real()));
    else
        sv = linalg::singular_values(s.entries);
    return make_spectral_result(SpectrumKind::singular_values,
                                {sv.data(), sv.data() + sv.size()}, s.K, s.m);
}

int counting(const SpectralResult& result, double lambda, SignPart sign) {
    if (!(lambda > 0.0)) throw invalid_parameter("counting: lambda must be > 0");
    if (sign != SignPart::all && result.kind != SpectrumKind::signed_eigenvalues)
        throw invalid_parameter("counting: signed counts need signed eigenvalues");
    int n = 0;
    for (double v : result.values) {
        switch (sign) {
            case SignPart::all: n += std::abs(v) > lambda; break;
            case SignPart::plus: n += v > lambda; break;
            case SignPart::minus: n += -v > lambda; break;
        }
    }
    return n;
}

SpectralResult restrict_sign(const SpectralResult& result, SignPart sign) {
    if (sign == SignPart::all) {
        SpectralResult r = result;
        for (double& v : r.values) v = std::abs(v);
        std::sort(r.values.begin(), r.values.end(), std::greater<>());
        return r;
    }
    if (result.kind != SpectrumKind::signed_eigenvalues)
        throw invalid_parameter("restrict_sign: sign restriction needs signed eigenvalues");
    SpectralResult r = result;
    r.values.clear();
    for (double v : result.values) {
        if (sign == SignPart::plus && v > 0.0) r.values.push_back(v);
        if (sign == SignPart::minus && v < 0.0) r.values.push_back(-v);
    }
    r.kind = SpectrumKind::singular_values;
    std::sort(r.values.begin(), r.values.end(), std::greater<>());
    return r;
}

AsymptoticWindowEstimate estimate_coefficients(const SpectralResult& result, double theta,
                                               int j_lo, int j_hi, SignPart sign) {
    if (!(theta > 0.0)) throw invalid_parameter("estimate_coefficients: theta must be > 0");
    const SpectralResult sub = restrict_sign(result, sign);
    const int n = static_cast<int>(sub.values.size());
    if (j_lo < 1 || j_lo >= j_hi)
        throw invalid_parameter("estimate_coefficients: need 1 <= j_lo < j_hi");
    if (j_hi > n)
        throw insufficient_spectrum("estimate_coefficients: window [" + std::to_string(j_lo) +
                                    ", " + std::to_string(j_hi) + "] exceeds " +
                                    std::to_string(n) + " retained values (sign " +
                                    sign_part_name(sign) + ")");
    AsymptoticWindowEstimate est;
    est.theta = theta;
    est.j_lo = j_lo;
    est.j_hi = j_hi;
    for (int j = j_lo; j <= j_hi; ++j) {
        const double v = std::abs(sub.values[j - 1]);
        // n(v) = #{|value| > v}: at a tie only the largest rank satisfies j = n(v).
        if (j < n && std::abs(sub.values[j]) == v) continue;
        est.c_values.push_back(j * std::pow(v, theta));
    }
    if (est.c_values.empty())
        throw insufficient_spectrum("estimate_coefficients: window collapsed by ties");
    est.c_inf = *std::min_element(est.c_values.begin(), est.c_values.end());
    est.c_sup = *std::max_element(est.c_values.begin(), est.c_values.end());
    double sum = 0.0;
    for (double c : est.c_values) sum += c;
    est.c_mean = sum / static_cast<double>(est.c_values.size());
    return est;
}

double compare_counting(const SpectralResult& a, const SpectralResult& b, double theta,
                        const std::vector<double>& lambda_grid) {
    if (lambda_grid.empty()) throw invalid_parameter("compare_counting: empty grid");
    double worst = 0.0;
    for (double lam : lambda_grid) {
        const int na = counting(a, lam, SignPart::all);
        const int nb = counting(b, lam, SignPart::all);
        worst = std::max(worst, std::pow(lam, theta) * std::abs(na - nb));
    }
    return worst;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw invalid_parameter("log_grid: bad range");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return g;
}

std::pair<int, int> default_window(int dim) {
    return {std::max(8, dim / 64), dim / 8};
}

namespace {

Cmat kron_with_identity(const Eigen::MatrixXd& g, int m) {
    Cmat out = Cmat::Zero(g.rows() * m, g.cols() * m);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (int a = 0; a < m; ++a) out(i * m + a, j * m + a) = g(i, j);
    return out;
}

// Greedy nearest matching of two complex multisets; returns the largest pair
// distance.
double multiset_mismatch(std::vector<std::complex<double>> a,
                         std::vector<std::complex<double>> b) {
    double worst = 0.0;
    for (const auto& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t pick = 0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double d = std::abs(x - b[i]);
            if (d < best) {
                best = d;
                pick = i;
            }
        }
        if (b.empty()) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, best);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return worst;
}

}  // namespace

IdentityCheckReport brute_force_identity_check(const DiscreteMeasure& mu, const KernelSpec& spec,
                                               const MatrixWeightField& v, std::uint64_t seed) {
    if (mu.size() > 16)
        throw invalid_parameter("brute_force_identity_check: instance too large (K > 16)");
    const int k = mu.size();
    const int m = v.m;

    KernelMatrix km = assemble(mu, spec);
    SqrtFactor g = sqrt_factor(km);
    SandwichMatrix s = sandwich(g, v, mu);

    // (a) spectrum of G V G vs nonzero spectrum of blkdiag(V) (M (x) I_m).
    Cmat vblock = Cmat::Zero(k * m, k * m);
    for (int i = 0; i < k; ++i)
        vblock.block(i * m, i * m, m, m) = v.eval(mu.atoms[i].point);
    const Cmat mk = kron_with_identity(km.entries, m);
    const Eigen::VectorXcd ev_sand = linalg::general_eigenvalues(s.entries);
    const Eigen::VectorXcd ev_prod = linalg::general_eigenvalues(Cmat(vblock * mk));

    double scale = 0.0;
    for (Eigen::Index i = 0; i < ev_sand.size(); ++i) scale = std::max(scale, std::abs(ev_sand(i)));
    const double zero_tol = std::max(1e-10 * scale, 1e-14);
    std::vector<std::complex<double>> sa, sb;
    for (Eigen::Index i = 0; i < ev_sand.size(); ++i)
        if (std::abs(ev_sand(i)) > zero_tol) sa.push_back(ev_sand(i));
    for (Eigen::Index i = 0; i < ev_prod.size(); ++i)
        if (std::abs(ev_prod(i)) > zero_tol) sb.push_back(ev_prod(i));

    IdentityCheckReport rep;
    if (sa.size() != sb.size()) {
        rep.eig_mismatch = std::numeric_limits<double>::infinity();
        rep.detail = "nonzero eigenvalue counts differ: " + std::to_string(sa.size()) + " vs " +
                     std::to_string(sb.size());
    } else {
        rep.eig_mismatch = multiset_mismatch(sa, sb) / std::max(scale, 1e-300);
    }

    // (b) alternative factor B = G Q with Q a random co-isometry (QQ* = I_K):
    // B B* = G G = M, and the singular values of B* V B must match those of
    // G V G up to zeros.
    const int p = k + 5;
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd q(p, k);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < k; ++j) {
            // Box-Muller on deterministic bits.
            const double u1 = std::max(uniform01(rng), 1e-16);
            const double u2 = uniform01(rng);
            q(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    Eigen::MatrixXd z = qr.householderQ() * Eigen::MatrixXd::Identity(p, k);
    Eigen::MatrixXd bfac = g.entries * z.transpose();  // K x P, B B^T = G^2

    const Cmat bk = kron_with_identity(bfac, m);
    const Cmat alt = bk.adjoint() * vblock * bk;
    Eigen::VectorXd sv_ref = linalg::singular_values(s.entries);
    Eigen::VectorXd sv_alt = linalg::singular_values(alt);
    const double sv_scale = std::max(sv_ref.size() ? sv_ref(0) : 0.0, 1e-300);
    double worst = 0.0;
    for (int i = 0; i < k * m; ++i) {
        const double r = sv_ref(i);
        const double x = i < sv_alt.size() ? sv_alt(i) : 0.0;
        worst = std::max(worst, std::abs(r - x));
    }
    // Extra ranks of the larger factor must carry only numerical zeros.
    for (Eigen::Index i = k * m; i < sv_alt.size(); ++i)
        worst = std::max(worst, std::abs(sv_alt(i)));
    rep.sv_mismatch = worst / sv_scale;

    const double tol = 1e-8;
    rep.pass = rep.eig_mismatch <= tol && rep.sv_mismatch <= tol;
    if (rep.detail.empty())
        rep.detail = "eig mismatch " + csv::fmt(rep.eig_mismatch) + ", sv mismatch " +
                     csv::fmt(rep.sv_mismatch);
    return rep;
}

void export_spectrum_csv(const SpectralResult& result, const std::string& path) {
    csv::Writer w(path);
    w.line("# kind=" +
           std::string(result.kind == SpectrumKind::signed_eigenvalues ? "signed_eigenvalues"
                                                                       : "singular_values") +
           ", K=" + std::to_string(result.K) + ", m=" + std::to_string(result.m) +
           ", theta=" + csv::fmt(result.theta) + ", config_digest=" + result.provenance);
    w.line("j,value,c_j");
    for (std::size_t j = 1; j <= result.values.size(); ++j) {
        const double v = result.values[j - 1];
        const double c = std::isnan(result.theta)
                             ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(j) * std::pow(std::abs(v), result.theta);
        w.line(std::to_string(j) + "," + csv::fmt(v) + "," + csv::fmt(c));
    }
}

}  // namespace bslab
