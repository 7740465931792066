#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bslab/config.hpp"
#include "bslab/measure.hpp"
#include "bslab/weight.hpp"

namespace bslab {

struct ExperimentReport {
    std::string digest;
    std::vector<std::pair<std::string, std::string>> entries;  // ordered key = value
    std::vector<std::string> csv_paths;                        // files emitted under output_dir
    bool passed = true;
    bool cache_hit = false;
    double wall_seconds = 0.0;

    void put(const std::string& key, const std::string& value);
    void put(const std::string& key, double value);
    void put(const std::string& key, int value);
    void put(const std::string& key, bool value);
    const std::string* find(const std::string& key) const;
};

// Builds the measure / weight described by a config (also used by tests).
DiscreteMeasure build_measure(const ExperimentConfig& cfg);
DiscreteMeasure build_measure_at_depth(const ExperimentConfig& cfg, int depth);
MatrixWeightField build_weight(const ExperimentConfig& cfg);

// Runs the named experiment, emits CSVs and report.txt under output_dir,
// honoring the cache when enabled.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

void write_report(const ExperimentReport& report, const std::string& path);

// Cache root: $BSLAB_CACHE_ROOT if set, else .bslab-cache in the working dir.
std::string cache_root();

}  // namespace bslab
