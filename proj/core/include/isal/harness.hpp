#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "isal/dataset.hpp"
#include "isal/network.hpp"
#include "isal/saliency.hpp"

namespace isal {

// One (image, method, layer, blur radius) measurement. Degenerate rows keep
// their place in the report instead of being dropped.
struct EvalRecord {
    std::string image_id;
    SaliencyMethod method = SaliencyMethod::implicit;
    std::string layer;
    double blur_radius = 0.0;
    double nss = 0.0;
    double cc = 0.0;
    bool degenerate = false;

    friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct EvalAggregate {
    SaliencyMethod method = SaliencyMethod::implicit;
    std::string layer;
    double blur_radius = 0.0;
    double mean_nss = 0.0;
    double mean_cc = 0.0;
    std::size_t sample_count = 0;  // non-degenerate records behind the means
};

struct EvalReport {
    std::vector<EvalRecord> records;
    std::vector<EvalAggregate> aggregates;
    struct Provenance {
        std::string model_hash;
        std::uint64_t dataset_seed = 0;
        std::string tool_version;
    } provenance;

    const EvalAggregate* find_aggregate(SaliencyMethod method, const std::string& layer, double radius) const;
};

struct EvalOptions {
    SaliencyOptions saliency;
    // when set, every map lands at <dir>/<method>/<layer>/<radius>/<image>.pgm
    std::optional<std::filesystem::path> maps_dir;
};

// For every (image, method, layer, radius), in that fixed order: blur the
// input, compute the method's map at image resolution, score NSS against the
// fixations and CC against the density map. Metric degeneracies are recorded
// per row; other errors abort.
EvalReport run_eval(const NetworkModel& model, const DatasetManifest& dataset,
                    const std::vector<SaliencyMethod>& methods, const std::vector<std::string>& tap_layers,
                    const std::vector<double>& blur_radii, const EvalOptions& opts = {});

// run_eval at radius 0 over every conv block of the model for one method.
// The stability drop is max-over-layers minus min-over-layers of the mean.
struct SweepResult {
    EvalReport report;
    double nss_stability_drop = 0.0;
    double cc_stability_drop = 0.0;
};
SweepResult layer_sweep(const NetworkModel& model, const DatasetManifest& dataset, SaliencyMethod method,
                        const EvalOptions& opts = {});

// CSV with header "image,method,layer,blur_radius,nss,cc"; degenerate rows
// carry the literal "degenerate" in both metric columns. Doubles are written
// in shortest round-trip form, so parsing reproduces records exactly.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
std::vector<EvalRecord> read_report_csv(const std::filesystem::path& path);

// Recompute aggregates from records (used on parsed CSVs and as a check).
std::vector<EvalAggregate> aggregate_records(const std::vector<EvalRecord>& records);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace isal
