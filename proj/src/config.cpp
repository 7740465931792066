#include "bslab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "bslab/csv.hpp"
#include "bslab/errors.hpp"
#include "bslab/kernel.hpp"

namespace bslab {

using nlohmann::json;

const char* experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::spectrum: return "spectrum";
        case ExperimentKind::weyl_check: return "weyl_check";
        case ExperimentKind::sign_separation: return "sign_separation";
        case ExperimentKind::singular_weyl: return "singular_weyl";
        case ExperimentKind::lower_bound_fractal: return "lower_bound_fractal";
        case ExperimentKind::perturbation_stability: return "perturbation_stability";
        case ExperimentKind::ahlfors: return "ahlfors";
        case ExperimentKind::oracle_circle: return "oracle_circle";
        case ExperimentKind::brute_force: return "brute_force";
    }
    return "spectrum";
}

ExperimentKind experiment_from_name(const std::string& name) {
    for (ExperimentKind k :
         {ExperimentKind::spectrum, ExperimentKind::weyl_check, ExperimentKind::sign_separation,
          ExperimentKind::singular_weyl, ExperimentKind::lower_bound_fractal,
          ExperimentKind::perturbation_stability, ExperimentKind::ahlfors,
          ExperimentKind::oracle_circle, ExperimentKind::brute_force}) {
        if (name == experiment_name(k)) return k;
    }
    throw parse_error("unknown experiment: " + name);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_full_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

json value_from_text(const std::string& raw) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    double d;
    if (parse_full_double(raw, d)) return d;
    // comma list of numbers -> array
    if (raw.find(',') != std::string::npos) {
        json arr = json::array();
        std::stringstream ss(raw);
        std::string item;
        bool all_numeric = true;
        while (std::getline(ss, item, ',')) {
            double v;
            if (!parse_full_double(trim(item), v)) {
                all_numeric = false;
                break;
            }
            arr.push_back(v);
        }
        if (all_numeric && !arr.empty()) return arr;
    }
    return raw;
}

json parse_kv_text(const std::string& text) {
    json cfg = json::object();
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw parse_error("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw parse_error("line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw parse_error("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw parse_error("line " + std::to_string(lineno) + ": empty key");
        std::string path = section.empty() ? key : section + "." + key;
        // dotted keys allowed at top level
        if (section.empty() && key.find('.') != std::string::npos) path = key;
        if (!seen.insert(path).second)
            throw parse_error("line " + std::to_string(lineno) + ": duplicate key " + path);
        json v = value_from_text(value);
        std::size_t dot = path.find('.');
        if (dot == std::string::npos) {
            cfg[path] = v;
        } else {
            cfg[path.substr(0, dot)][path.substr(dot + 1)] = v;
        }
    }
    return cfg;
}

void flatten(const json& node, const std::string& prefix, std::map<std::string, std::string>& out) {
    if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i)
            flatten(node[i], prefix + "[" + std::to_string(i) + "]", out);
    } else if (node.is_boolean()) {
        out[prefix] = node.get<bool>() ? "true" : "false";
    } else if (node.is_number()) {
        out[prefix] = csv::fmt(node.get<double>());
    } else if (node.is_string()) {
        out[prefix] = node.get<std::string>();
    } else {
        out[prefix] = node.dump();
    }
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"experiment", "output_dir", "cache"}},
        {"measure", {"family", "K", "ratio", "depth", "profile_xs", "profile_ys"}},
        {"kernel", {"l", "alpha", "N"}},
        {"weight",
         {"preset", "m", "c", "profile", "v_lo", "v_hi", "t_split", "amp", "freq", "a", "b",
          "angle", "v_re", "v_im"}},
        {"spectra", {"kind", "j_lo", "j_hi"}},
        {"experiment",
         {"name", "tolerance", "eps0", "steps", "trials", "seed", "depths", "n_max"}},
    };
    return s;
}

void check_known_keys(const json& cfg) {
    const auto& sch = schema();
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        const std::string& key = it.key();
        if (it.value().is_object()) {
            auto sec = sch.find(key);
            if (sec == sch.end()) throw parse_error("unknown section: " + key);
            for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
                if (!sec->second.count(jt.key()))
                    throw parse_error("unknown key: " + key + "." + jt.key());
        } else {
            if (!sch.at("").count(key)) throw parse_error("unknown key: " + key);
        }
    }
}

double require_number(const json& sec, const std::string& section, const std::string& key) {
    if (!sec.contains(key)) throw parse_error("missing required key: " + section + "." + key);
    if (!sec[key].is_number()) throw parse_error(section + "." + key + ": expected a number");
    return sec[key].get<double>();
}

double opt_number(const json& sec, const std::string& section, const std::string& key,
                  double fallback) {
    if (!sec.is_object() || !sec.contains(key)) return fallback;
    if (!sec[key].is_number()) throw parse_error(section + "." + key + ": expected a number");
    return sec[key].get<double>();
}

std::string opt_string(const json& sec, const std::string& section, const std::string& key,
                       const std::string& fallback) {
    if (!sec.is_object() || !sec.contains(key)) return fallback;
    if (!sec[key].is_string()) throw parse_error(section + "." + key + ": expected a string");
    return sec[key].get<std::string>();
}

std::vector<double> opt_array(const json& sec, const std::string& section, const std::string& key) {
    if (!sec.is_object() || !sec.contains(key)) return {};
    if (!sec[key].is_array()) throw parse_error(section + "." + key + ": expected a number list");
    std::vector<double> out;
    for (const auto& v : sec[key]) {
        if (!v.is_number()) throw parse_error(section + "." + key + ": expected a number list");
        out.push_back(v.get<double>());
    }
    return out;
}

double family_dimension(MeasureFamily f, double ratio) {
    switch (f) {
        case MeasureFamily::circle:
        case MeasureFamily::segment:
        case MeasureFamily::lipschitz_graph: return 1.0;
        case MeasureFamily::sphere: return 2.0;
        case MeasureFamily::cantor: return std::log(2.0) / std::log(1.0 / ratio);
        case MeasureFamily::cantor_dust: return 2.0 * std::log(2.0) / std::log(1.0 / ratio);
        case MeasureFamily::custom: break;
    }
    throw parse_error("measure.family: custom family is not constructible from config");
}

int family_ambient(MeasureFamily f) {
    switch (f) {
        case MeasureFamily::cantor: return 1;
        case MeasureFamily::sphere: return 3;
        default: return 2;
    }
}

ExperimentConfig resolve(json cfg) {
    check_known_keys(cfg);
    ExperimentConfig out;
    out.raw = cfg;
    out.digest = cache_key(cfg);

    // experiment: top-level string and/or [experiment] section with a name
    std::string name;
    if (cfg.contains("experiment") && cfg["experiment"].is_string())
        name = cfg["experiment"].get<std::string>();
    json exp = json::object();
    if (cfg.contains("experiment") && cfg["experiment"].is_object()) exp = cfg["experiment"];
    if (exp.contains("name")) {
        const std::string n = exp["name"].get<std::string>();
        if (!name.empty() && name != n)
            throw parse_error("experiment name given twice with different values");
        name = n;
    }
    if (name.empty()) throw parse_error("missing required key: experiment");
    out.experiment = experiment_from_name(name);

    out.output_dir = opt_string(cfg, "", "output_dir", "out");
    if (cfg.contains("cache")) {
        if (!cfg["cache"].is_boolean()) throw parse_error("cache: expected true/false");
        out.use_cache = cfg["cache"].get<bool>();
    }

    out.tolerance = opt_number(exp, "experiment", "tolerance",
                               std::numeric_limits<double>::quiet_NaN());
    out.eps0 = opt_number(exp, "experiment", "eps0", 0.02);
    out.eps_steps = static_cast<int>(opt_number(exp, "experiment", "steps", 4));
    out.trials = static_cast<int>(opt_number(exp, "experiment", "trials", 20));
    out.seed = static_cast<std::uint64_t>(opt_number(exp, "experiment", "seed", 1));
    out.depths = static_cast<int>(opt_number(exp, "experiment", "depths", 4));
    out.n_max = static_cast<int>(opt_number(exp, "experiment", "n_max", 512));

    const bool needs_measure =
        out.experiment != ExperimentKind::oracle_circle && out.experiment != ExperimentKind::brute_force;

    json measure = cfg.contains("measure") ? cfg["measure"] : json::object();
    json kernel = cfg.contains("kernel") ? cfg["kernel"] : json::object();
    json weight = cfg.contains("weight") ? cfg["weight"] : json::object();
    json spectra = cfg.contains("spectra") ? cfg["spectra"] : json::object();

    if (needs_measure) {
        if (!measure.contains("family"))
            throw parse_error("missing required key: measure.family");
        out.family = family_from_name(measure["family"].get<std::string>());
        out.ratio = opt_number(measure, "measure", "ratio", 1.0 / 3.0);
        out.depth = static_cast<int>(opt_number(measure, "measure", "depth", 8));
        if (out.family == MeasureFamily::cantor || out.family == MeasureFamily::cantor_dust) {
            if (!(out.ratio > 0.0) || !(out.ratio < 0.5))
                throw parse_error("measure.ratio: must lie in (0, 1/2)");
            if (out.depth < 1) throw parse_error("measure.depth: must be >= 1");
        } else {
            out.k = static_cast<int>(require_number(measure, "measure", "K"));
            if (out.k < 1) throw parse_error("measure.K: must be >= 1");
        }
        out.profile_xs = opt_array(measure, "measure", "profile_xs");
        out.profile_ys = opt_array(measure, "measure", "profile_ys");
        if (out.family == MeasureFamily::lipschitz_graph && out.profile_xs.empty())
            throw parse_error("missing required key: measure.profile_xs");

        out.s = family_dimension(out.family, out.ratio);
        const int n_dim = family_ambient(out.family);
        if (kernel.contains("N") &&
            static_cast<int>(kernel["N"].get<double>()) != n_dim)
            throw parse_error("kernel.N: does not match the measure family's ambient dimension");
        const bool has_l = kernel.is_object() && kernel.contains("l");
        const bool has_alpha = kernel.is_object() && kernel.contains("alpha");
        if (has_l == has_alpha)
            throw parse_error("kernel: exactly one of l or alpha is required");
        if (has_l)
            out.order_l = require_number(kernel, "kernel", "l");
        else
            out.order_l = (n_dim - require_number(kernel, "kernel", "alpha")) / 2.0;
        KernelSpec spec;
        try {
            spec = riesz_exponents(n_dim, out.order_l, out.s);
        } catch (const invalid_parameter& e) {
            throw parse_error(std::string("kernel.l: ") + e.what());
        }
        out.alpha = spec.alpha;
        out.theta = spec.theta;
    } else if (out.experiment == ExperimentKind::oracle_circle) {
        out.alpha = require_number(kernel, "kernel", "alpha");
        if (!(out.alpha > 0.0) || !(out.alpha < 1.0))
            throw parse_error("kernel.alpha: must lie in (0, 1) for the circle oracle");
        out.s = 1.0;
        out.order_l = (1.0 - out.alpha) / 2.0;
        out.theta = 1.0 / (1.0 - out.alpha);
        if (out.n_max < 1) throw parse_error("experiment.n_max: must be >= 1");
    }

    // weight
    out.preset = WeightPreset::scalar_const;
    if (weight.is_object() && weight.contains("preset")) {
        const std::string p = weight["preset"].get<std::string>();
        bool found = false;
        for (WeightPreset wp : {WeightPreset::scalar_const, WeightPreset::scalar_profile,
                                WeightPreset::hermitian_rotated, WeightPreset::nilpotent}) {
            if (p == preset_name(wp)) {
                out.preset = wp;
                found = true;
            }
        }
        if (!found) throw parse_error("weight.preset: unknown preset " + p);
    }
    out.m = (out.preset == WeightPreset::hermitian_rotated ||
             out.preset == WeightPreset::nilpotent)
                ? 2
                : 1;
    if (weight.is_object() && weight.contains("m") &&
        static_cast<int>(weight["m"].get<double>()) != out.m)
        throw parse_error("weight.m: inconsistent with preset");
    out.c = opt_number(weight, "weight", "c", 1.0);
    out.profile_kind = opt_string(weight, "weight", "profile", "step");
    if (out.profile_kind != "step" && out.profile_kind != "cos")
        throw parse_error("weight.profile: expected step or cos");
    out.v_lo = opt_number(weight, "weight", "v_lo", 1.0);
    out.v_hi = opt_number(weight, "weight", "v_hi", 2.0);
    out.t_split = opt_number(weight, "weight", "t_split", 0.5);
    out.amp = opt_number(weight, "weight", "amp", 0.5);
    out.freq = opt_number(weight, "weight", "freq", 1.0);
    out.a = opt_number(weight, "weight", "a", 1.0);
    out.b = opt_number(weight, "weight", "b", 2.0);
    if (weight.is_object() && weight.contains("angle") && weight["angle"].is_number()) {
        out.angle_polar = false;
        out.angle_const = weight["angle"].get<double>();
    } else {
        const std::string ang = opt_string(weight, "weight", "angle", "polar");
        if (ang != "polar") throw parse_error("weight.angle: expected a number or \"polar\"");
        out.angle_polar = true;
    }
    out.nil_re = opt_number(weight, "weight", "v_re", 1.0);
    out.nil_im = opt_number(weight, "weight", "v_im", 0.0);

    // spectra
    out.spectra_kind = opt_string(spectra, "spectra", "kind", "auto");
    if (out.spectra_kind != "auto" && out.spectra_kind != "eigs" && out.spectra_kind != "svd" &&
        out.spectra_kind != "both")
        throw parse_error("spectra.kind: expected eigs, svd or both");
    out.j_lo = static_cast<int>(opt_number(spectra, "spectra", "j_lo", 0));
    out.j_hi = static_cast<int>(opt_number(spectra, "spectra", "j_hi", 0));

    return out;
}

}  // namespace

std::string canonical_config_text(const json& cfg, const std::string& version) {
    std::map<std::string, std::string> flat;
    flatten(cfg, "", flat);
    std::string text = "format=" + version + "\n";
    for (const auto& [k, v] : flat) text += k + "=" + v + "\n";
    return text;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw numerical_failure("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string cache_key(const json& cfg, const std::string& version) {
    return sha256_hex(canonical_config_text(cfg, version));
}

ExperimentConfig parse_config(const std::string& text) {
    std::size_t first = text.find_first_not_of(" \t\r\n");
    json cfg;
    if (first != std::string::npos && text[first] == '{') {
        try {
            cfg = json::parse(text);
        } catch (const json::exception& e) {
            throw parse_error(std::string("JSON parse failure: ") + e.what());
        }
        if (!cfg.is_object()) throw parse_error("config JSON must be an object");
    } else {
        cfg = parse_kv_text(text);
    }
    return resolve(std::move(cfg));
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace bslab
