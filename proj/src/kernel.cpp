#include "bslab/kernel.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "bslab/csv.hpp"
#include "bslab/errors.hpp"
#include "bslab/linalg.hpp"

namespace bslab {

namespace {

constexpr double pi = std::numbers::pi;

// Exact kernel integral over the unit circle, int_0^{2pi} (2 sin(t/2))^{-a} dt.
double circle_row_integral_constant(double a) {
    return 2.0 * std::tgamma(1.0 - a) * std::sin(pi * a / 2.0) * std::tgamma(a / 2.0) /
           std::tgamma(1.0 - a / 2.0);
}

// Energy int int |x-y|^{-a} dmu dmu of the unit self-similar construction,
// closed through its own scaling: the depth-p center sum S_p misses exactly
// n_p cell self-energies, each equal to mass_p^2 * scale_p^{-a} * E.
double self_similar_energy_1d(double ratio, double a) {
    double prev = 0.0;
    double e = 0.0;
    std::vector<double> lefts{0.0};
    double len = 1.0;
    for (int p = 1; p <= 12; ++p) {
        std::vector<double> next;
        next.reserve(lefts.size() * 2);
        for (double x : lefts) {
            next.push_back(x);
            next.push_back(x + len * (1.0 - ratio));
        }
        lefts = std::move(next);
        len *= ratio;
        const double w = std::pow(2.0, -p);
        const std::size_t n = lefts.size();
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                s += 2.0 * w * w * std::pow(std::abs(lefts[i] - lefts[j]), -a);
        const double geo = std::pow(2.0, -p) * std::pow(ratio, -p * a);
        if (!(geo < 1.0))
            throw invalid_parameter("cantor closure: alpha must be below the set dimension");
        e = s / (1.0 - geo);
        if (p >= 6 && std::abs(e - prev) <= 1e-6 * std::abs(e)) break;
        prev = e;
    }
    return e;
}

double self_similar_energy_2d(double ratio, double a) {
    double prev = 0.0;
    double e = 0.0;
    std::vector<double> lefts{0.0};
    double len = 1.0;
    for (int p = 1; p <= 5; ++p) {
        std::vector<double> next;
        next.reserve(lefts.size() * 2);
        for (double x : lefts) {
            next.push_back(x);
            next.push_back(x + len * (1.0 - ratio));
        }
        lefts = std::move(next);
        len *= ratio;
        const std::size_t n1 = lefts.size();
        std::vector<double> cx(n1 * n1), cy(n1 * n1);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n1; ++j) {
                cx[i * n1 + j] = lefts[i];
                cy[i * n1 + j] = lefts[j];
            }
        const std::size_t n = cx.size();
        const double w = std::pow(4.0, -p);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                s += 2.0 * w * w *
                     std::pow(std::hypot(cx[i] - cx[j], cy[i] - cy[j]), -a);
        const double geo = std::pow(4.0, -p) * std::pow(ratio, -p * a);
        if (!(geo < 1.0))
            throw invalid_parameter("cantor_dust closure: alpha must be below the set dimension");
        e = s / (1.0 - geo);
        if (p >= 4 && std::abs(e - prev) <= 1e-5 * std::abs(e)) break;
        prev = e;
    }
    return e;
}

double cached_energy_1d(double ratio, double a) {
    static std::map<std::pair<double, double>, double> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto key = std::make_pair(ratio, a);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    double e = self_similar_energy_1d(ratio, a);
    cache.emplace(key, e);
    return e;
}

double cached_energy_2d(double ratio, double a) {
    static std::map<std::pair<double, double>, double> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto key = std::make_pair(ratio, a);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    double e = self_similar_energy_2d(ratio, a);
    cache.emplace(key, e);
    return e;
}

// Self-energy of a flat square cell of area `w` (unit surface density) via a
// 4x4 subdivision with the singular pair removed and restored by scaling.
double sphere_cell_diag(double w, double a) {
    const double side = std::sqrt(w);
    const double sub = side / 4.0;
    const double wm = w / 16.0;
    double s = 0.0;
    for (int p = 0; p < 16; ++p)
        for (int q = p + 1; q < 16; ++q) {
            const double dx = ((p % 4) - (q % 4)) * sub;
            const double dy = ((p / 4) - (q / 4)) * sub;
            s += 2.0 * wm * wm * std::pow(std::hypot(dx, dy), -a);
        }
    const double self_scale = std::pow(4.0, a - 2.0);
    return s / (1.0 - self_scale) / w;
}

DiagMethod method_for(MeasureFamily f) {
    switch (f) {
        case MeasureFamily::circle: return DiagMethod::row_integral;
        case MeasureFamily::sphere:
        case MeasureFamily::cantor:
        case MeasureFamily::cantor_dust: return DiagMethod::subdivision;
        default: return DiagMethod::analytic_1d;
    }
}

}  // namespace

const char* diag_method_name(DiagMethod m) {
    switch (m) {
        case DiagMethod::analytic_1d: return "analytic_1d";
        case DiagMethod::subdivision: return "subdivision";
        case DiagMethod::row_integral: return "row_integral";
    }
    return "analytic_1d";
}

KernelSpec riesz_exponents(int ambient_dim, double order_l, double s) {
    if (ambient_dim < 1) throw invalid_parameter("riesz_exponents: N must be >= 1");
    if (!(order_l > 0.0)) throw invalid_parameter("riesz_exponents: l must be > 0");
    if (!(s > 0.0) || s > ambient_dim + 1e-12)
        throw invalid_parameter("riesz_exponents: s must lie in (0, N]");
    KernelSpec spec;
    spec.ambient_dim = ambient_dim;
    spec.order_l = order_l;
    spec.alpha = ambient_dim - 2.0 * order_l;
    if (!(spec.alpha > 0.0))
        throw invalid_parameter("riesz_exponents: alpha = N - 2l must be > 0 (got " +
                                csv::fmt(spec.alpha) + ")");
    if (!(spec.alpha < s))
        throw invalid_parameter("riesz_exponents: alpha must lie in (0, s); got alpha = " +
                                csv::fmt(spec.alpha) + ", s = " + csv::fmt(s));
    spec.theta = s / (s - spec.alpha);
    return spec;
}

KernelMatrix assemble(const DiscreteMeasure& mu, const KernelSpec& spec) {
    const int k = mu.size();
    if (k == 0) throw invalid_parameter("assemble: measure has no atoms");
    if (!(spec.alpha > 0.0) || !(spec.alpha < mu.hausdorff_dim))
        throw invalid_parameter("assemble: alpha must lie in (0, s) for this measure");

    KernelMatrix km;
    km.diag_method = method_for(mu.family);
    km.entries.resize(k, k);
    Eigen::MatrixXd& m = km.entries;
    const double a = spec.alpha;

    // Upper triangle only; mirrored afterwards so the matrix is symmetric
    // bit-exactly.
    std::atomic<bool> degenerate{false};
    auto fill_rows = [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const Atom& ai = mu.atoms[i];
            for (int j = i + 1; j < k; ++j) {
                const Atom& aj = mu.atoms[j];
                const double d = (ai.point - aj.point).norm();
                if (d == 0.0) {
                    degenerate.store(true);
                    return;
                }
                m(i, j) = std::sqrt(ai.weight * aj.weight) * std::pow(d, -a);
            }
        }
    };
    const int nthreads = std::min(linalg::num_threads(), std::max(1, k / 64));
    if (nthreads <= 1) {
        fill_rows(0, k);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (k + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(k, lo + chunk);
            if (lo < hi) pool.emplace_back(fill_rows, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    if (degenerate.load())
        throw degenerate_measure("assemble: coincident distinct atoms");
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) m(j, i) = m(i, j);

    // Diagonal closure, fixed serial order.
    switch (km.diag_method) {
        case DiagMethod::row_integral: {
            // Closed curve: pick the diagonal so each row reproduces the exact
            // kernel integral over the whole circle. This removes the O(h^{1-a})
            // quadrature deficit of the singular midpoint sum.
            const double lam0 = circle_row_integral_constant(a);
            for (int i = 0; i < k; ++i) {
                const double radius = mu.atoms[i].point.norm();
                const double density = mu.total_mass / (2.0 * pi * radius);
                const double row_int = density * std::pow(radius, 1.0 - a) * lam0;
                double acc = 0.0;
                const double wi = mu.atoms[i].weight;
                for (int j = 0; j < k; ++j) {
                    if (j == i) continue;
                    acc += std::sqrt(mu.atoms[j].weight / wi) * m(i, j);
                }
                m(i, i) = row_int - acc;
            }
            break;
        }
        case DiagMethod::analytic_1d: {
            // Flat cell of mass w spread over Euclidean length `extent`:
            // self-energy/w = w * extent^{-a} * 2/((1-a)(2-a)).
            if (!(a < 1.0))
                throw invalid_parameter("assemble: analytic_1d closure needs alpha < 1");
            const double c = 2.0 / ((1.0 - a) * (2.0 - a));
            for (int i = 0; i < k; ++i) {
                const Atom& at = mu.atoms[i];
                m(i, i) = at.weight * std::pow(at.extent, -a) * c;
            }
            break;
        }
        case DiagMethod::subdivision: {
            if (mu.family == MeasureFamily::cantor) {
                const double ratio = std::pow(2.0, -1.0 / mu.hausdorff_dim);
                const double e = cached_energy_1d(ratio, a);
                for (int i = 0; i < k; ++i) {
                    const Atom& at = mu.atoms[i];
                    m(i, i) = at.weight * std::pow(at.extent, -a) * e;
                }
            } else if (mu.family == MeasureFamily::cantor_dust) {
                const double ratio = std::pow(2.0, -2.0 / mu.hausdorff_dim);
                const double e = cached_energy_2d(ratio, a);
                for (int i = 0; i < k; ++i) {
                    const Atom& at = mu.atoms[i];
                    const double side = at.extent / std::sqrt(2.0);
                    m(i, i) = at.weight * std::pow(side, -a) * e;
                }
            } else {
                if (!(a < 2.0))
                    throw invalid_parameter("assemble: sphere closure needs alpha < 2");
                for (int i = 0; i < k; ++i) m(i, i) = sphere_cell_diag(mu.atoms[i].weight, a);
            }
            break;
        }
    }
    return km;
}

SqrtFactor sqrt_factor(KernelMatrix& kernel, double clip_rel) {
    if (kernel.dim() == 0) throw invalid_parameter("sqrt_factor: empty kernel");
    if (!(clip_rel >= 0.0)) throw invalid_parameter("sqrt_factor: clip_rel must be >= 0");
    linalg::SymEig eig = linalg::sym_eig(kernel.entries);
    const int k = kernel.dim();
    const double lam_max = eig.values(k - 1);
    kernel.spectrum_floor = eig.values(0);

    SqrtFactor g;
    g.spectrum_floor = eig.values(0);
    Eigen::VectorXd roots(k);
    for (int i = 0; i < k; ++i) {
        if (eig.values(i) < clip_rel * lam_max || eig.values(i) < 0.0) {
            roots(i) = 0.0;
            ++g.clip_count;
        } else {
            roots(i) = std::sqrt(eig.values(i));
        }
    }
    g.ill_conditioned = g.clip_count > k / 100;
    g.entries.noalias() = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
    g.entries = ((g.entries + g.entries.transpose()) / 2.0).eval();
    return g;
}

void export_matrix_binary(const Eigen::MatrixXd& m, const std::string& path) {
    static_assert(std::endian::native == std::endian::little,
                  "binary export assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const std::uint64_t dim = static_cast<std::uint64_t>(m.rows());
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    if (!out) throw std::runtime_error("write failure: " + path);
}

Eigen::MatrixXd import_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::uint64_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    Eigen::MatrixXd m(dim, dim);
    for (std::uint64_t i = 0; i < dim; ++i)
        for (std::uint64_t j = 0; j < dim; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(i, j) = v;
        }
    if (!in) throw std::runtime_error("truncated matrix file: " + path);
    return m;
}

void export_matrix_sidecar(const std::string& path, const DiscreteMeasure& mu,
                           const KernelSpec& spec, DiagMethod method) {
    csv::Writer w(path);
    w.line("family = " + std::string(family_name(mu.family)));
    w.line("K = " + std::to_string(mu.size()));
    w.line("alpha = " + csv::fmt(spec.alpha));
    w.line("s = " + csv::fmt(mu.hausdorff_dim));
    w.line("diag_method = " + std::string(diag_method_name(method)));
}

}  // namespace bslab
