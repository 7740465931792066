#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "bslab/measure.hpp"
#include "bslab/weight.hpp"

namespace bslab {

inline constexpr const char* kConfigFormatVersion = "bslab-config-v1";

enum class ExperimentKind {
    spectrum,
    weyl_check,
    sign_separation,
    singular_weyl,
    lower_bound_fractal,
    perturbation_stability,
    ahlfors,
    oracle_circle,
    brute_force,
};

const char* experiment_name(ExperimentKind k);
ExperimentKind experiment_from_name(const std::string& name);

// Fully validated, resolved experiment description.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::spectrum;

    // measure
    MeasureFamily family = MeasureFamily::circle;
    int k = 0;
    double ratio = 1.0 / 3.0;
    int depth = 8;
    std::vector<double> profile_xs, profile_ys;

    // kernel (resolved: both l and alpha filled, s from the family)
    double order_l = 0.0;
    double alpha = 0.0;
    double s = 0.0;
    double theta = 0.0;

    // weight
    WeightPreset preset = WeightPreset::scalar_const;
    int m = 1;
    double c = 1.0;
    std::string profile_kind = "step";
    double v_lo = 1.0, v_hi = 2.0, t_split = 0.5;
    double amp = 0.5, freq = 1.0;
    double a = 1.0, b = 2.0;
    bool angle_polar = true;
    double angle_const = 0.0;
    double nil_re = 1.0, nil_im = 0.0;

    // spectra
    std::string spectra_kind = "auto";  // eigs | svd | both | auto
    int j_lo = 0, j_hi = 0;             // 0 = default window

    // experiment parameters
    double tolerance = std::numeric_limits<double>::quiet_NaN();  // NaN = per-experiment default
    double eps0 = 0.02;
    int eps_steps = 4;
    int trials = 20;
    std::uint64_t seed = 1;
    int depths = 4;
    int n_max = 512;

    std::string output_dir = "out";
    bool use_cache = true;

    nlohmann::json raw;   // parsed config as given (post key checks)
    std::string digest;   // cache key of `raw`
};

// Accepts the sectioned key-value text format or a JSON object.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical flattening used for the digest: sorted `path=value` lines with
// %.17g-normalized numbers, prefixed by the format-version tag.
std::string canonical_config_text(const nlohmann::json& cfg, const std::string& version);
std::string sha256_hex(const std::string& data);
std::string cache_key(const nlohmann::json& cfg,
                      const std::string& version = kConfigFormatVersion);

}  // namespace bslab
