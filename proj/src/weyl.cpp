#include "bslab/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bslab/csv.hpp"
#include "bslab/errors.hpp"

namespace bslab {

namespace {

constexpr double pi = std::numbers::pi;

void check_exponent_domain(double s, double alpha, const char* who) {
    if (!(s > 0.0)) throw invalid_parameter(std::string(who) + ": s must be > 0");
    if (!(alpha > 0.0) || !(alpha < s))
        throw invalid_parameter(std::string(who) + ": alpha must lie in (0, s)");
}

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
constexpr double kGK15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kK15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kG7Weights[7] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                                  0.417959183673469, 0.381830050505119, 0.279705391489277,
                                  0.129484966168870};

struct PanelResult {
    double value;
    double error;
};

template <class F>
PanelResult gk15(const F& f, double a, double b) {
    const double c = (a + b) / 2.0;
    const double h = (b - a) / 2.0;
    double k15 = 0.0, g7 = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double v = f(c + h * kGK15Nodes[i]);
        k15 += kK15Weights[i] * v;
        if (i % 2 == 1) g7 += kG7Weights[i / 2] * v;
    }
    return {h * k15, std::abs(h * (k15 - g7))};
}

// Adaptive bisection to absolute accuracy `tol` over [a, b].
template <class F>
PanelResult adaptive_gk(const F& f, double a, double b, double tol) {
    struct Seg {
        double a, b, value, error;
    };
    PanelResult whole = gk15(f, a, b);
    std::vector<Seg> stack{{a, b, whole.value, whole.error}};
    double total = 0.0, bound = 0.0;
    const double min_len = (b - a) * 0x1.0p-52;
    std::size_t splits = 0;
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        const double local_tol = tol * std::max((s.b - s.a) / (b - a), 1e-6);
        if (s.error <= local_tol || (s.b - s.a) <= min_len || splits > 200000) {
            total += s.value;
            bound += s.error;
            continue;
        }
        ++splits;
        const double mid = (s.a + s.b) / 2.0;
        PanelResult left = gk15(f, s.a, mid);
        PanelResult right = gk15(f, mid, s.b);
        stack.push_back({s.a, mid, left.value, left.error});
        stack.push_back({mid, s.b, right.value, right.error});
    }
    return {total, bound};
}

}  // namespace

double kappa(double s, double alpha) {
    check_exponent_domain(s, alpha, "kappa");
    return std::pow(pi, s / 2.0) * std::pow(2.0, s - alpha) * std::tgamma((s - alpha) / 2.0) /
           std::tgamma(alpha / 2.0);
}

double rho_flat(double s, double alpha) {
    check_exponent_domain(s, alpha, "rho_flat");
    const double theta = s / (s - alpha);
    const double omega = std::pow(pi, s / 2.0) / std::tgamma(s / 2.0 + 1.0);
    return std::pow(2.0 * pi, -s) * omega * std::pow(kappa(s, alpha), theta);
}

const char* weight_part_name(WeightPart p) {
    switch (p) {
        case WeightPart::abs: return "abs";
        case WeightPart::plus: return "plus";
        case WeightPart::minus: return "minus";
    }
    return "abs";
}

double weyl_coefficient(const DiscreteMeasure& mu, const MatrixWeightField& v, double theta,
                        double rho, WeightPart part) {
    if (part != WeightPart::abs && !v.hermitian_flag)
        throw invalid_parameter("weyl_coefficient: signed parts need a Hermitian weight");
    double acc = 0.0;
    for (const Atom& a : mu.atoms) {
        const Eigen::MatrixXcd w = v.eval(a.point);
        double tp = 0.0;
        switch (part) {
            case WeightPart::abs: tp = trace_power(abs_matrix(w), theta); break;
            case WeightPart::plus: tp = trace_power(hermitian_split(w).Vplus, theta); break;
            case WeightPart::minus: tp = trace_power(hermitian_split(w).Vminus, theta); break;
        }
        acc += a.weight * tp;
    }
    return rho * acc;
}

WeylPrediction predict(const DiscreteMeasure& mu, const MatrixWeightField& v,
                       const KernelSpec& spec) {
    WeylPrediction p;
    p.theta = spec.theta;
    p.rho = rho_flat(mu.hausdorff_dim, spec.alpha);
    p.coeff_abs = weyl_coefficient(mu, v, p.theta, p.rho, WeightPart::abs);
    if (v.hermitian_flag) {
        p.coeff_plus = weyl_coefficient(mu, v, p.theta, p.rho, WeightPart::plus);
        p.coeff_minus = weyl_coefficient(mu, v, p.theta, p.rho, WeightPart::minus);
    }
    return p;
}

std::vector<double> OracleSpectrum::expanded() const {
    std::vector<double> out;
    out.reserve(eigenvalues.size() * 2);
    for (std::size_t n = 0; n < eigenvalues.size(); ++n) {
        out.push_back(eigenvalues[n]);
        if (n >= 1) out.push_back(eigenvalues[n]);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

SpectralResult OracleSpectrum::as_spectral_result(double theta) const {
    SpectralResult r = make_spectral_result(SpectrumKind::signed_eigenvalues, expanded(),
                                            static_cast<int>(eigenvalues.size()), 1);
    r.theta = theta;
    r.provenance = "circle_fourier_oracle";
    return r;
}

OracleSpectrum circle_fourier_oracle(double alpha, int n_max) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw invalid_parameter("circle_fourier_oracle: alpha must lie in (0, 1)");
    if (n_max < 1) throw invalid_parameter("circle_fourier_oracle: n_max must be >= 1");

    OracleSpectrum out;
    out.alpha = alpha;
    out.eigenvalues.resize(n_max + 1);

    // lambda_n = 2 int_0^pi (2 sin(t/2))^{-alpha} cos(n t) dt by symmetry;
    // the endpoint singularity t^{-alpha} is graded away by t = u^2.
    const double target = 1e-10;
    const double u_hi = std::sqrt(pi);
    double worst = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        auto integrand = [alpha, n](double u) {
            const double t = u * u;
            if (t <= 0.0) return 0.0;
            const double kernel = std::pow(2.0 * std::sin(t / 2.0), -alpha);
            return 2.0 * u * kernel * std::cos(n * t);
        };
        PanelResult r = adaptive_gk(integrand, 0.0, u_hi, target / 4.0);
        out.eigenvalues[n] = 2.0 * r.value;
        worst = std::max(worst, 2.0 * r.error);
    }
    out.quadrature_error_bound = worst;
    if (worst > target)
        throw numerical_failure("circle_fourier_oracle: quadrature bound " + csv::fmt(worst) +
                                " exceeds 1e-10");
    return out;
}

WeylComparison predicted_vs_measured(const WeylPrediction& prediction,
                                     const AsymptoticWindowEstimate& estimate, WeightPart part,
                                     double tolerance) {
    if (std::abs(prediction.theta - estimate.theta) > 1e-12)
        throw invalid_parameter("predicted_vs_measured: theta mismatch");
    double pred = prediction.coeff_abs;
    if (part == WeightPart::plus) pred = prediction.coeff_plus;
    if (part == WeightPart::minus) pred = prediction.coeff_minus;
    if (std::isnan(pred))
        throw invalid_parameter("predicted_vs_measured: no prediction for part " +
                                std::string(weight_part_name(part)));
    WeylComparison cmp;
    cmp.predicted = pred;
    cmp.tolerance = tolerance;
    cmp.dev_mean = std::abs(estimate.c_mean - pred) / pred;
    cmp.dev_inf = std::abs(estimate.c_inf - pred) / pred;
    cmp.dev_sup = std::abs(estimate.c_sup - pred) / pred;
    cmp.two_sided_only = estimate.c_inf > 0.0 && estimate.c_sup / estimate.c_inf > 1.25;
    cmp.pass = cmp.dev_mean <= tolerance;
    return cmp;
}

void export_oracle_csv(const OracleSpectrum& oracle, const std::string& path) {
    csv::Writer w(path);
    w.line("# alpha=" + csv::fmt(oracle.alpha) +
           ",quadrature_error_bound=" + csv::fmt(oracle.quadrature_error_bound));
    w.line("n,lambda_n,multiplicity");
    for (std::size_t n = 0; n < oracle.eigenvalues.size(); ++n)
        w.line(std::to_string(n) + "," + csv::fmt(oracle.eigenvalues[n]) + "," +
               (n == 0 ? "1" : "2"));
}

}  // namespace bslab
