#pragma once

#include <string>
#include <vector>

#include "bslab/kernel.hpp"
#include "bslab/measure.hpp"
#include "bslab/spectral.hpp"
#include "bslab/weight.hpp"

namespace bslab {

// Fourier constant of |u|^{-alpha} in dimension s:
// kappa = pi^{s/2} 2^{s-alpha} Gamma((s-alpha)/2) / Gamma(alpha/2).
double kappa(double s, double alpha);

// Flat-model counting density rho = (2 pi)^{-s} omega_s kappa^theta with
// omega_s the unit-ball volume and theta = s/(s-alpha).
double rho_flat(double s, double alpha);

enum class WeightPart { abs, plus, minus };

const char* weight_part_name(WeightPart p);

// rho * sum_i w_i Tr(part(V(x_i))^theta).
double weyl_coefficient(const DiscreteMeasure& mu, const MatrixWeightField& v, double theta,
                        double rho, WeightPart part);

struct WeylPrediction {
    double theta = 0.0;
    double rho = 0.0;
    double coeff_abs = 0.0;
    double coeff_plus = std::numeric_limits<double>::quiet_NaN();   // Hermitian only
    double coeff_minus = std::numeric_limits<double>::quiet_NaN();  // Hermitian only
};

WeylPrediction predict(const DiscreteMeasure& mu, const MatrixWeightField& v,
                       const KernelSpec& spec);

// Exact eigenvalues of the circle convolution kernel (2 sin(t/2))^{-alpha}:
// lambda_n = int_0^{2pi} (2 sin(t/2))^{-alpha} cos(n t) dt, n-th Fourier mode,
// multiplicity 2 for n >= 1.
struct OracleSpectrum {
    double alpha = 0.0;
    std::vector<double> eigenvalues;  // index n = 0..n_max
    double quadrature_error_bound = 0.0;

    // Multiplicity-expanded list, descending.
    std::vector<double> expanded() const;
    SpectralResult as_spectral_result(double theta) const;
};

OracleSpectrum circle_fourier_oracle(double alpha, int n_max);

struct WeylComparison {
    double predicted = 0.0;
    double dev_mean = 0.0;
    double dev_inf = 0.0;
    double dev_sup = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    // Set when c_sup/c_inf > 1.25: only two-sided bounds are claimed, no limit.
    bool two_sided_only = false;
};

WeylComparison predicted_vs_measured(const WeylPrediction& prediction,
                                     const AsymptoticWindowEstimate& estimate, WeightPart part,
                                     double tolerance);

void export_oracle_csv(const OracleSpectrum& oracle, const std::string& path);

}  // namespace bslab
