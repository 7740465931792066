#include "bslab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bslab/csv.hpp"
#include "bslab/errors.hpp"

namespace bslab {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

const char* family_name(MeasureFamily f) {
    switch (f) {
        case MeasureFamily::circle: return "circle";
        case MeasureFamily::segment: return "segment";
        case MeasureFamily::lipschitz_graph: return "lipschitz_graph";
        case MeasureFamily::sphere: return "sphere";
        case MeasureFamily::cantor: return "cantor";
        case MeasureFamily::cantor_dust: return "cantor_dust";
        case MeasureFamily::custom: return "custom";
    }
    return "custom";
}

MeasureFamily family_from_name(const std::string& name) {
    for (MeasureFamily f : {MeasureFamily::circle, MeasureFamily::segment,
                            MeasureFamily::lipschitz_graph, MeasureFamily::sphere,
                            MeasureFamily::cantor, MeasureFamily::cantor_dust,
                            MeasureFamily::custom}) {
        if (name == family_name(f)) return f;
    }
    throw invalid_parameter("unknown measure family: " + name);
}

double DiscreteMeasure::min_extent() const {
    double e = std::numeric_limits<double>::infinity();
    for (const Atom& a : atoms) e = std::min(e, a.extent);
    return e;
}

void DiscreteMeasure::validate() const {
    if (ambient_dim < 1) throw invalid_parameter("measure: ambient_dim must be >= 1");
    if (!(hausdorff_dim > 0.0) || hausdorff_dim > ambient_dim + 1e-12)
        throw invalid_parameter("measure: s must lie in (0, N]");
    double sum = 0.0;
    for (const Atom& a : atoms) {
        if (a.point.size() != ambient_dim)
            throw invalid_parameter("measure: point dimension mismatch");
        if (!(a.weight > 0.0)) throw invalid_parameter("measure: atom weight must be > 0");
        if (!(a.extent > 0.0)) throw invalid_parameter("measure: atom extent must be > 0");
        sum += a.weight;
    }
    if (std::abs(sum - total_mass) > 1e-12 * std::max(1.0, std::abs(total_mass)))
        throw invalid_parameter("measure: atom weights do not sum to total_mass");
    for (const Atom& a : atoms) {
        if (a.point.norm() > diameter + 1.0)
            throw invalid_parameter("measure: atom outside stated bounding box");
    }
}

PiecewiseLinearProfile::PiecewiseLinearProfile(std::vector<double> xs_, std::vector<double> ys_)
    : xs(std::move(xs_)), ys(std::move(ys_)) {
    if (xs.size() < 2 || xs.size() != ys.size())
        throw invalid_parameter("profile: need matching breakpoint lists with >= 2 entries");
    if (std::abs(xs.front()) > 1e-15 || std::abs(xs.back() - 1.0) > 1e-15)
        throw invalid_parameter("profile: breakpoints must span [0, 1]");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw invalid_parameter("profile: breakpoints must increase");
}

double PiecewiseLinearProfile::value(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    auto it = std::upper_bound(xs.begin(), xs.end(), t);
    std::size_t hi = std::min<std::size_t>(xs.size() - 1, static_cast<std::size_t>(it - xs.begin()));
    if (hi == 0) hi = 1;
    std::size_t lo = hi - 1;
    double u = (t - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + u * (ys[hi] - ys[lo]);
}

double PiecewiseLinearProfile::arclength(double a, double b) const {
    if (b < a) std::swap(a, b);
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    double len = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        double lo = std::max(a, xs[i - 1]);
        double hi = std::min(b, xs[i]);
        if (hi <= lo) continue;
        double slope = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
        len += (hi - lo) * std::hypot(1.0, slope);
    }
    return len;
}

double PiecewiseLinearProfile::lipschitz_constant() const {
    double l = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        l = std::max(l, std::abs((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])));
    return l;
}

DiscreteMeasure make_circle(int k) {
    if (k < 1) throw invalid_parameter("make_circle: K must be >= 1");
    DiscreteMeasure mu;
    mu.ambient_dim = 2;
    mu.hausdorff_dim = 1.0;
    mu.family = MeasureFamily::circle;
    mu.total_mass = two_pi;
    mu.diameter = 2.0;
    const double h = two_pi / k;
    mu.atoms.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double th = h * i;
        Atom a;
        a.point = Eigen::Vector2d(std::cos(th), std::sin(th));
        a.weight = h;
        a.extent = h;
        mu.atoms.push_back(std::move(a));
    }
    return mu;
}

DiscreteMeasure make_segment(int k) {
    if (k < 1) throw invalid_parameter("make_segment: K must be >= 1");
    DiscreteMeasure mu;
    mu.ambient_dim = 2;
    mu.hausdorff_dim = 1.0;
    mu.family = MeasureFamily::segment;
    mu.total_mass = 1.0;
    mu.diameter = 1.0;
    const double h = 1.0 / k;
    mu.atoms.reserve(k);
    for (int i = 0; i < k; ++i) {
        Atom a;
        a.point = Eigen::Vector2d((i + 0.5) * h, 0.0);
        a.weight = h;
        a.extent = h;
        mu.atoms.push_back(std::move(a));
    }
    return mu;
}

DiscreteMeasure make_lipschitz_graph(int k, const PiecewiseLinearProfile& profile) {
    if (k < 1) throw invalid_parameter("make_lipschitz_graph: K must be >= 1");
    DiscreteMeasure mu;
    mu.ambient_dim = 2;
    mu.hausdorff_dim = 1.0;
    mu.family = MeasureFamily::lipschitz_graph;
    const double h = 1.0 / k;
    double mass = 0.0;
    double ymin = 0.0, ymax = 0.0;
    mu.atoms.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double t = (i + 0.5) * h;
        Atom a;
        a.point = Eigen::Vector2d(t, profile.value(t));
        a.weight = profile.arclength(i * h, (i + 1) * h);
        a.extent = a.weight;
        ymin = std::min(ymin, a.point.y());
        ymax = std::max(ymax, a.point.y());
        mass += a.weight;
        mu.atoms.push_back(std::move(a));
    }
    mu.total_mass = mass;
    mu.diameter = std::hypot(1.0, ymax - ymin);
    return mu;
}

DiscreteMeasure make_sphere(int k) {
    if (k < 1) throw invalid_parameter("make_sphere: K must be >= 1");
    DiscreteMeasure mu;
    mu.ambient_dim = 3;
    mu.hausdorff_dim = 2.0;
    mu.family = MeasureFamily::sphere;
    mu.total_mass = 4.0 * std::numbers::pi;
    mu.diameter = 2.0;
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double w = 4.0 * std::numbers::pi / k;
    const double ext = 4.0 / std::sqrt(static_cast<double>(k));
    mu.atoms.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / k;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * i;
        Atom a;
        a.point = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
        a.weight = w;
        a.extent = ext;
        mu.atoms.push_back(std::move(a));
    }
    return mu;
}

namespace {

// Left endpoints of the level-`depth` construction intervals, in increasing
// order, plus the common interval length.
std::pair<std::vector<double>, double> cantor_cells(double ratio, int depth) {
    std::vector<double> lefts{0.0};
    double len = 1.0;
    for (int d = 0; d < depth; ++d) {
        std::vector<double> next;
        next.reserve(lefts.size() * 2);
        for (double a : lefts) {
            next.push_back(a);
            next.push_back(a + len * (1.0 - ratio));
        }
        lefts = std::move(next);
        len *= ratio;
    }
    std::sort(lefts.begin(), lefts.end());
    return {lefts, len};
}

void check_cantor_params(double ratio, int depth, const char* who) {
    if (!(ratio > 0.0) || !(ratio < 0.5))
        throw invalid_parameter(std::string(who) + ": ratio must lie in (0, 1/2)");
    if (depth < 1) throw invalid_parameter(std::string(who) + ": depth must be >= 1");
}

}  // namespace

DiscreteMeasure make_cantor(double ratio, int depth) {
    check_cantor_params(ratio, depth, "make_cantor");
    auto [lefts, len] = cantor_cells(ratio, depth);
    DiscreteMeasure mu;
    mu.ambient_dim = 1;
    mu.hausdorff_dim = std::log(2.0) / std::log(1.0 / ratio);
    mu.family = MeasureFamily::cantor;
    mu.total_mass = 1.0;
    mu.diameter = 1.0;
    const double w = std::pow(2.0, -depth);
    mu.atoms.reserve(lefts.size());
    for (double a : lefts) {
        Atom at;
        at.point = Eigen::VectorXd::Constant(1, a + len / 2.0);
        at.weight = w;
        at.extent = len;
        mu.atoms.push_back(std::move(at));
    }
    return mu;
}

DiscreteMeasure make_cantor_dust(double ratio, int depth) {
    check_cantor_params(ratio, depth, "make_cantor_dust");
    auto [lefts, len] = cantor_cells(ratio, depth);
    DiscreteMeasure mu;
    mu.ambient_dim = 2;
    mu.hausdorff_dim = 2.0 * std::log(2.0) / std::log(1.0 / ratio);
    mu.family = MeasureFamily::cantor_dust;
    mu.total_mass = 1.0;
    mu.diameter = std::sqrt(2.0);
    const double w = std::pow(4.0, -depth);
    mu.atoms.reserve(lefts.size() * lefts.size());
    for (double ax : lefts)
        for (double ay : lefts) {
            Atom at;
            at.point = Eigen::Vector2d(ax + len / 2.0, ay + len / 2.0);
            at.weight = w;
            at.extent = len * std::sqrt(2.0);
            mu.atoms.push_back(std::move(at));
        }
    return mu;
}

double ball_mass(const DiscreteMeasure& mu, const Eigen::VectorXd& center, double r) {
    double m = 0.0;
    for (const Atom& a : mu.atoms)
        if ((a.point - center).norm() <= r) m += a.weight;
    return m;
}

AhlforsReport ahlfors_audit(const DiscreteMeasure& mu, int n_centers,
                            const std::vector<double>& radii) {
    if (radii.empty()) throw invalid_parameter("ahlfors_audit: radii list is empty");
    for (double r : radii)
        if (!(r > 0.0)) throw invalid_parameter("ahlfors_audit: radii must be positive");
    if (n_centers < 1) throw invalid_parameter("ahlfors_audit: n_centers must be >= 1");
    const int k = mu.size();
    if (k == 0) throw invalid_parameter("ahlfors_audit: measure has no atoms");
    n_centers = std::min(n_centers, k);

    AhlforsReport rep;
    rep.s = mu.hausdorff_dim;
    rep.c_minus_hat = std::numeric_limits<double>::infinity();
    rep.c_plus_hat = 0.0;

    std::vector<double> sorted_radii = radii;
    std::sort(sorted_radii.begin(), sorted_radii.end());

    for (int c = 0; c < n_centers; ++c) {
        const int idx = static_cast<int>((static_cast<long long>(c) * k) / n_centers);
        const Eigen::VectorXd& x = mu.atoms[idx].point;
        double sum_lr = 0.0, sum_lq = 0.0, sum_lr2 = 0.0, sum_lrlq = 0.0;
        for (double r : sorted_radii) {
            const double m = ball_mass(mu, x, r);
            const double ratio = m / std::pow(r, rep.s);
            rep.samples.push_back({idx, r, ratio});
            rep.c_minus_hat = std::min(rep.c_minus_hat, ratio);
            rep.c_plus_hat = std::max(rep.c_plus_hat, ratio);
            if (ratio > 0.0) {
                const double lr = std::log(r), lq = std::log(ratio);
                sum_lr += lr;
                sum_lq += lq;
                sum_lr2 += lr * lr;
                sum_lrlq += lr * lq;
            }
        }
        // Per-center trend of log(ratio) against log(r); a point mass forces
        // slope -s as r -> 0.
        const double n = static_cast<double>(sorted_radii.size());
        const double denom = n * sum_lr2 - sum_lr * sum_lr;
        if (n >= 2 && std::abs(denom) > 1e-30) {
            const double slope = (n * sum_lrlq - sum_lr * sum_lq) / denom;
            if (slope < -rep.s / 2.0) rep.upper_regularity_failure = true;
        }
    }
    return rep;
}

std::vector<double> default_audit_radii(const DiscreteMeasure& mu, int n) {
    if (n < 2) throw invalid_parameter("default_audit_radii: need n >= 2");
    const double lo = std::max(16.0 * mu.min_extent(), mu.diameter / 50.0);
    const double hi = 0.9 * mu.diameter;
    if (!(lo < hi)) throw invalid_parameter("default_audit_radii: measure too coarse for audit");
    std::vector<double> radii(n);
    for (int i = 0; i < n; ++i)
        radii[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return radii;
}

void export_measure_csv(const DiscreteMeasure& mu, const std::string& path) {
    csv::Writer w(path);
    w.line("# family=" + std::string(family_name(mu.family)) + ",N=" +
           std::to_string(mu.ambient_dim) + ",s=" + csv::fmt(mu.hausdorff_dim) +
           ",total_mass=" + csv::fmt(mu.total_mass));
    std::string header;
    for (int d = 0; d < mu.ambient_dim; ++d) header += "x" + std::to_string(d) + ",";
    header += "weight,extent";
    w.line(header);
    for (const Atom& a : mu.atoms) {
        std::string row;
        for (int d = 0; d < mu.ambient_dim; ++d) row += csv::fmt(a.point(d)) + ",";
        row += csv::fmt(a.weight) + "," + csv::fmt(a.extent);
        w.line(row);
    }
}

}  // namespace bslab
