#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>

#include "bslab/measure.hpp"

namespace bslab {

enum class WeightPreset { scalar_const, scalar_profile, hermitian_rotated, nilpotent, custom };

const char* preset_name(WeightPreset p);

// An m x m matrix weight on the support of a measure. `eval` must be pure;
// hermitian_flag is certified by the preset constructors.
struct MatrixWeightField {
    int m = 1;
    std::function<Eigen::MatrixXcd(const Eigen::VectorXd&)> eval;
    WeightPreset preset = WeightPreset::custom;
    bool hermitian_flag = false;
};

// |V| = (V* V)^{1/2}, the PSD modulus.
Eigen::MatrixXcd abs_matrix(const Eigen::MatrixXcd& v);

struct HermitianSplit {
    Eigen::MatrixXcd absV;
    Eigen::MatrixXcd Vplus;
    Eigen::MatrixXcd Vminus;
};

// V_pm = (|V| +- V)/2 for Hermitian V; throws invalid_parameter otherwise.
HermitianSplit hermitian_split(const Eigen::MatrixXcd& v);

// Sum of theta-th powers of the eigenvalues of a PSD matrix.
double trace_power(const Eigen::MatrixXcd& p, double theta);

// (sum_i w_i ||V(x_i)||_op^theta)^{1/theta}; theta must be > 1.
double weight_norm_theta(const MatrixWeightField& v, const DiscreteMeasure& mu, double theta);

struct Factorization {
    Eigen::MatrixXcd W;  // |V|^{1/2}, PSD
    Eigen::MatrixXcd U;  // W^+ V W^+
};

Factorization factorize(const Eigen::MatrixXcd& v);

// Gaussian smoothing of the field against the measure itself, plus the
// regularized-modulus companion (|V_eps(x)|^2 + eps^2)^{1/2}.
struct MollifiedField {
    MatrixWeightField field;
    MatrixWeightField y_eps;
};

MollifiedField mollify(const MatrixWeightField& v, const DiscreteMeasure& mu, double eps);

// Preset constructors.
MatrixWeightField scalar_const(double c);
MatrixWeightField scalar_profile(std::function<double(const Eigen::VectorXd&)> v);
MatrixWeightField hermitian_rotated(std::function<double(const Eigen::VectorXd&)> a,
                                    std::function<double(const Eigen::VectorXd&)> b,
                                    std::function<double(const Eigen::VectorXd&)> angle);
MatrixWeightField nilpotent(std::function<std::complex<double>(const Eigen::VectorXd&)> v);
MatrixWeightField custom_field(int m, std::function<Eigen::MatrixXcd(const Eigen::VectorXd&)> eval,
                               bool hermitian);

// Pointwise difference field (same m), used for perturbation budgets.
MatrixWeightField difference_field(const MatrixWeightField& a, const MatrixWeightField& b);

void export_weight_csv(const MatrixWeightField& v, const DiscreteMeasure& mu,
                       const std::string& path);

}  // namespace bslab
