#pragma once

#include <Eigen/Dense>
#include <string>

#include "bslab/measure.hpp"

namespace bslab {

// Exponent bookkeeping for the Riesz kernel |x-y|^{-alpha} with alpha = N - 2l.
// Valid only for 0 < alpha < s, where theta = s/(s - alpha) > 1.
struct KernelSpec {
    int ambient_dim = 0;
    double order_l = 0.0;
    double alpha = 0.0;
    double theta = 0.0;
};

KernelSpec riesz_exponents(int ambient_dim, double order_l, double s);

enum class DiagMethod { analytic_1d, subdivision, row_integral };

const char* diag_method_name(DiagMethod m);

struct KernelMatrix {
    Eigen::MatrixXd entries;
    DiagMethod diag_method = DiagMethod::analytic_1d;
    // Most negative eigenvalue seen while factorizing; NaN until sqrt_factor runs.
    double spectrum_floor = std::numeric_limits<double>::quiet_NaN();

    int dim() const { return static_cast<int>(entries.rows()); }
};

// Symmetric Nystrom matrix M_ij = sqrt(w_i w_j) |x_i - x_j|^{-alpha} with a
// per-family diagonal closure. Deterministic regardless of thread count.
KernelMatrix assemble(const DiscreteMeasure& mu, const KernelSpec& spec);

struct SqrtFactor {
    Eigen::MatrixXd entries;  // symmetric PSD, G*G reconstructs the kernel matrix
    int clip_count = 0;
    bool ill_conditioned = false;
    double spectrum_floor = 0.0;

    int dim() const { return static_cast<int>(entries.rows()); }
};

SqrtFactor sqrt_factor(KernelMatrix& kernel, double clip_rel = 1e-12);

// Flat binary export: u64 little-endian dim, then dim^2 f64 row-major.
void export_matrix_binary(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd import_matrix_binary(const std::string& path);
void export_matrix_sidecar(const std::string& path, const DiscreteMeasure& mu,
                           const KernelSpec& spec, DiagMethod method);

}  // namespace bslab
