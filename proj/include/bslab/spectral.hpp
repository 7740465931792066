#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bslab/kernel.hpp"
#include "bslab/measure.hpp"
#include "bslab/weight.hpp"

namespace bslab {

// The (K m) x (K m) contraction S[(i,a),(j,b)] = sum_k G_ik V(x_k)_ab G_kj.
struct SandwichMatrix {
    Eigen::MatrixXcd entries;
    int K = 0;
    int m = 1;
    bool hermitian_flag = false;
    bool real_entries = false;  // true when every V(x_k) is real-valued

    int dim() const { return static_cast<int>(entries.rows()); }
};

SandwichMatrix sandwich(const SqrtFactor& g, const MatrixWeightField& v,
                        const DiscreteMeasure& mu);

enum class SpectrumKind { signed_eigenvalues, singular_values };

struct SpectralResult {
    SpectrumKind kind = SpectrumKind::signed_eigenvalues;
    std::vector<double> values;  // descending by |.|; signed kind keeps signs
    int K = 0;
    int m = 1;
    double theta = std::numeric_limits<double>::quiet_NaN();
    std::string provenance = "library";
};

// Sorts descending by magnitude and fills K/m bookkeeping.
SpectralResult make_spectral_result(SpectrumKind kind, std::vector<double> values, int K, int m);

SpectralResult signed_spectrum(const SandwichMatrix& s);
SpectralResult singular_spectrum(const SandwichMatrix& s);

enum class SignPart { all, plus, minus };

const char* sign_part_name(SignPart s);

// n(lambda): strict count above lambda, multiplicity respected.
int counting(const SpectralResult& result, double lambda, SignPart sign);

struct AsymptoticWindowEstimate {
    double theta = 0.0;
    int j_lo = 0;
    int j_hi = 0;
    std::vector<double> c_values;  // c_j = j |value_j|^theta on the window
    double c_mean = 0.0;
    double c_inf = 0.0;
    double c_sup = 0.0;
};

// Window statistics of c_j = j * |value_j|^theta over ranks [j_lo, j_hi] of the
// sign-restricted subsequence; ties contribute only their largest rank.
AsymptoticWindowEstimate estimate_coefficients(const SpectralResult& result, double theta,
                                               int j_lo, int j_hi,
                                               SignPart sign = SignPart::all);

// max over the grid of lambda^theta |n_A - n_B| (magnitude counting).
double compare_counting(const SpectralResult& a, const SpectralResult& b, double theta,
                        const std::vector<double>& lambda_grid);

std::vector<double> log_grid(double lo, double hi, int n = 32);

// Trusted mid-spectrum band: [max(8, dim/64), dim/8].
std::pair<int, int> default_window(int dim);

// Magnitudes of the requested sign's subsequence as a new result.
SpectralResult restrict_sign(const SpectralResult& result, SignPart sign);

struct IdentityCheckReport {
    bool pass = false;
    double eig_mismatch = 0.0;  // relative, sandwich spectrum vs V-block times kernel
    double sv_mismatch = 0.0;   // relative, alternative factor B = G Q
    std::string detail;
};

// On a tiny instance, verifies the two factorization identities: eigenvalues of
// G V G match the nonzero eigenvalues of blkdiag(V) (M (x) I_m), and singular
// values of B* V B are factor-independent for any B with B B* = M.
IdentityCheckReport brute_force_identity_check(const DiscreteMeasure& mu, const KernelSpec& spec,
                                               const MatrixWeightField& v,
                                               std::uint64_t seed = 7);

void export_spectrum_csv(const SpectralResult& result, const std::string& path);

}  // namespace bslab
