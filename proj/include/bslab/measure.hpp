#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bslab {

enum class MeasureFamily { circle, segment, lipschitz_graph, sphere, cantor, cantor_dust, custom };

const char* family_name(MeasureFamily f);
MeasureFamily family_from_name(const std::string& name);

// One quadrature cell of the discretized measure: cell mass and cell diameter.
struct Atom {
    Eigen::VectorXd point;
    double weight = 0.0;
    double extent = 0.0;
};

struct DiscreteMeasure {
    int ambient_dim = 0;        // N
    double hausdorff_dim = 0.0; // s, in (0, N]
    std::vector<Atom> atoms;
    double total_mass = 0.0;
    MeasureFamily family = MeasureFamily::custom;
    double diameter = 0.0;

    int size() const { return static_cast<int>(atoms.size()); }
    double min_extent() const;
    // Checks mass consistency (1e-12 relative), dimensions and bounding box.
    void validate() const;
};

// Piecewise-linear graph profile over [0,1]; breakpoints fix the linear pieces
// so cell arclengths are exact.
struct PiecewiseLinearProfile {
    std::vector<double> xs;  // strictly increasing, xs.front()=0, xs.back()=1
    std::vector<double> ys;

    PiecewiseLinearProfile(std::vector<double> xs_, std::vector<double> ys_);
    double value(double t) const;
    double arclength(double a, double b) const;
    double lipschitz_constant() const;
};

DiscreteMeasure make_circle(int k);
DiscreteMeasure make_segment(int k);
DiscreteMeasure make_lipschitz_graph(int k, const PiecewiseLinearProfile& profile);
DiscreteMeasure make_sphere(int k);
DiscreteMeasure make_cantor(double ratio, int depth);
DiscreteMeasure make_cantor_dust(double ratio, int depth);

// Sum of atom weights within Euclidean distance r of the center.
double ball_mass(const DiscreteMeasure& mu, const Eigen::VectorXd& center, double r);

struct AhlforsSample {
    int center_index;
    double radius;
    double ratio;  // mu(B(x,r)) / r^s
};

struct AhlforsReport {
    double s = 0.0;
    double c_minus_hat = 0.0;
    double c_plus_hat = 0.0;
    std::vector<AhlforsSample> samples;
    // Set when some center's ratio grows as r shrinks (slope of log ratio vs
    // log r below -s/2), the signature of a point mass.
    bool upper_regularity_failure = false;
};

AhlforsReport ahlfors_audit(const DiscreteMeasure& mu, int n_centers,
                            const std::vector<double>& radii);

// Geometric radius grid between 16x the finest cell and 0.9x the diameter.
std::vector<double> default_audit_radii(const DiscreteMeasure& mu, int n = 10);

void export_measure_csv(const DiscreteMeasure& mu, const std::string& path);

}  // namespace bslab
