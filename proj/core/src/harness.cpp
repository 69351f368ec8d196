#include "isal/harness.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include "isal/errors.hpp"
#include "isal/imaging.hpp"
#include "isal/metrics.hpp"
#include "isal/model_io.hpp"
#include "isal/version.hpp"

namespace isal {

namespace {

std::string stem_of(const std::string& file) {
    const std::size_t dot = file.rfind('.');
    return dot == std::string::npos ? file : file.substr(0, dot);
}

SaliencyMap compute_map(const NetworkModel& model, const Tensor& image, SaliencyMethod method,
                        const std::string& layer, std::size_t h, std::size_t w, const SaliencyOptions& opts) {
    switch (method) {
        case SaliencyMethod::implicit: return implicit_saliency(model, image, layer, h, w, opts);
        case SaliencyMethod::feedforward: return feedforward_saliency(model, image, layer, h, w, opts);
        case SaliencyMethod::gradcam: return grad_cam(model, image, layer, h, w, std::nullopt, opts);
        case SaliencyMethod::gbp: return guided_bp_saliency(model, image, h, w);
    }
    throw InvalidConfig("unknown saliency method");
}

struct AggregateAccumulator {
    double nss_sum = 0.0;
    double cc_sum = 0.0;
    std::size_t n = 0;
};

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const EvalAggregate* EvalReport::find_aggregate(SaliencyMethod method, const std::string& layer,
                                                double radius) const {
    for (const auto& a : aggregates) {
        if (a.method == method && a.layer == layer && a.blur_radius == radius) return &a;
    }
    return nullptr;
}

std::vector<EvalAggregate> aggregate_records(const std::vector<EvalRecord>& records) {
    // keyed in first-appearance order to keep output deterministic
    std::vector<EvalAggregate> out;
    std::map<std::tuple<std::string, std::string, double>, std::size_t> index;
    for (const auto& r : records) {
        const std::tuple<std::string, std::string, double> key{to_string(r.method), r.layer, r.blur_radius};
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, out.size());
            out.push_back({r.method, r.layer, r.blur_radius, 0.0, 0.0, 0});
            it = index.find(key);
        }
        if (!r.degenerate) {
            auto& a = out[it->second];
            a.mean_nss += r.nss;
            a.mean_cc += r.cc;
            ++a.sample_count;
        }
    }
    for (auto& a : out) {
        if (a.sample_count > 0) {
            a.mean_nss /= static_cast<double>(a.sample_count);
            a.mean_cc /= static_cast<double>(a.sample_count);
        }
    }
    return out;
}

EvalReport run_eval(const NetworkModel& model, const DatasetManifest& dataset,
                    const std::vector<SaliencyMethod>& methods, const std::vector<std::string>& tap_layers,
                    const std::vector<double>& blur_radii, const EvalOptions& opts) {
    if (dataset.split != "eval") throw DataError("evaluation requires a manifest with split 'eval'");
    if (methods.empty() || tap_layers.empty() || blur_radii.empty()) {
        throw InvalidConfig("methods, layers, and blur radii must all be non-empty");
    }
    for (const auto& layer : tap_layers) {
        const std::size_t i = model.layer_index(layer);  // throws UnknownLayer
        if (model.layers[i].kind != LayerKind::conv2d) {
            throw UnknownLayer("tap layer '" + layer + "' is not a conv block");
        }
    }

    EvalReport report;
    report.provenance = {model_hash(model), dataset.seed, kToolVersion};

    for (const auto& rec : dataset.records) {
        const Tensor image = load_dataset_image(dataset, rec);
        const FixationMap fixations = FixationMap::from_grid(load_dataset_fixations(dataset, rec));
        const DensityMap density{load_dataset_density(dataset, rec)};
        const std::size_t h = image.extent(1), w = image.extent(2);

        for (const SaliencyMethod method : methods) {
            for (const auto& layer : tap_layers) {
                for (const double radius : blur_radii) {
                    const Tensor blurred = gaussian_blur(image, BlurSpec{radius});
                    const SaliencyMap map = compute_map(model, blurred, method, layer, h, w, opts.saliency);

                    EvalRecord row;
                    row.image_id = stem_of(rec.image_file);
                    row.method = method;
                    row.layer = layer;
                    row.blur_radius = radius;
                    try {
                        row.nss = nss(map.values, fixations);
                        row.cc = cc(map.values, density);
                    } catch (const DegenerateMap&) {
                        row = {row.image_id, method, layer, radius, 0.0, 0.0, true};
                    } catch (const NoFixations&) {
                        row = {row.image_id, method, layer, radius, 0.0, 0.0, true};
                    }
                    report.records.push_back(row);

                    if (opts.maps_dir) {
                        const auto dir =
                            *opts.maps_dir / to_string(method) / layer / format_double(radius);
                        std::error_code ec;
                        std::filesystem::create_directories(dir, ec);
                        if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
                        save_map_pgm(map, dir / (row.image_id + ".pgm"));
                    }
                }
            }
        }
    }
    report.aggregates = aggregate_records(report.records);
    return report;
}

SweepResult layer_sweep(const NetworkModel& model, const DatasetManifest& dataset, SaliencyMethod method,
                        const EvalOptions& opts) {
    const std::vector<std::string> layers = model.conv_layer_names();
    if (layers.empty()) throw InvalidModel("model has no conv blocks to sweep");

    SweepResult result;
    result.report = run_eval(model, dataset, {method}, layers, {0.0}, opts);

    bool first = true;
    double nss_lo = 0.0, nss_hi = 0.0, cc_lo = 0.0, cc_hi = 0.0;
    for (const auto& layer : layers) {
        const EvalAggregate* a = result.report.find_aggregate(method, layer, 0.0);
        if (!a || a->sample_count == 0) continue;
        if (first) {
            nss_lo = nss_hi = a->mean_nss;
            cc_lo = cc_hi = a->mean_cc;
            first = false;
        } else {
            nss_lo = std::min(nss_lo, a->mean_nss);
            nss_hi = std::max(nss_hi, a->mean_nss);
            cc_lo = std::min(cc_lo, a->mean_cc);
            cc_hi = std::max(cc_hi, a->mean_cc);
        }
    }
    result.nss_stability_drop = nss_hi - nss_lo;
    result.cc_stability_drop = cc_hi - cc_lo;
    return result;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "image,method,layer,blur_radius,nss,cc\n";
    for (const auto& r : report.records) {
        out << r.image_id << ',' << to_string(r.method) << ',' << r.layer << ',' << format_double(r.blur_radius)
            << ',';
        if (r.degenerate) {
            out << "degenerate,degenerate\n";
        } else {
            out << format_double(r.nss) << ',' << format_double(r.cc) << '\n';
        }
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<EvalRecord> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "image,method,layer,blur_radius,nss,cc") {
        throw FormatError("missing or malformed CSV header", 0);
    }
    std::vector<EvalRecord> records;
    auto parse_double = [](const std::string& field, const std::string& context) {
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
            throw DataError("malformed " + context + " value '" + field + "'");
        }
        return v;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 6) throw DataError("expected 6 CSV fields, got " + std::to_string(fields.size()));
        EvalRecord r;
        r.image_id = fields[0];
        r.method = method_from_string(fields[1]);
        r.layer = fields[2];
        r.blur_radius = parse_double(fields[3], "blur_radius");
        if (fields[4] == "degenerate" || fields[5] == "degenerate") {
            r.degenerate = true;
        } else {
            r.nss = parse_double(fields[4], "nss");
            r.cc = parse_double(fields[5], "cc");
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace isal
