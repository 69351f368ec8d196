#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "isal/dataset.hpp"
#include "isal/errors.hpp"
#include "isal/harness.hpp"
#include "isal/model_io.hpp"
#include "isal/pnm.hpp"
#include "isal/saliency.hpp"
#include "isal/train.hpp"
#include "isal/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::string default_tap_layer(const isal::NetworkModel& model) {
    const auto convs = model.conv_layer_names();
    if (convs.empty()) throw isal::InvalidModel("model has no conv blocks");
    return convs.back();
}

void print_aggregates(const isal::EvalReport& report) {
    std::printf("%-12s %-8s %-8s %12s %12s %8s\n", "method", "layer", "radius", "mean_nss", "mean_cc", "n");
    for (const auto& a : report.aggregates) {
        std::printf("%-12s %-8s %-8s %12.4f %12.4f %8zu\n", isal::to_string(a.method), a.layer.c_str(),
                    isal::format_double(a.blur_radius).c_str(), a.mean_nss, a.mean_cc, a.sample_count);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"implicit saliency extraction and evaluation"};
    app.set_version_flag("--version", isal::kToolVersion);
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic fixation dataset");
    std::string gen_out;
    std::size_t gen_count = 50, gen_classes = 4;
    std::uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_count, "number of images")->required();
    gen->add_option("--classes", gen_classes, "number of classes (1-4)")->required();
    gen->add_option("--seed", gen_seed, "generator seed")->required();

    // train
    auto* tr = app.add_subcommand("train", "train the toy CNN on a dataset");
    std::string tr_data, tr_out;
    std::size_t tr_epochs = 30, tr_batch = 8;
    double tr_lr = 0.01;
    std::uint64_t tr_seed = 0;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--out", tr_out, "output model path (.isw)")->required();
    tr->add_option("--epochs", tr_epochs, "training epochs")->required();
    tr->add_option("--lr", tr_lr, "learning rate")->required();
    tr->add_option("--batch", tr_batch, "batch size")->required();
    tr->add_option("--seed", tr_seed, "weight init + shuffle seed")->required();

    // saliency
    auto* sal = app.add_subcommand("saliency", "compute one saliency map");
    std::string sal_model, sal_image, sal_method, sal_layer, sal_out;
    sal->add_option("--model", sal_model, "model path")->required();
    sal->add_option("--image", sal_image, "input image (.ppm)")->required();
    sal->add_option("--method", sal_method, "implicit|feedforward|gradcam|gbp")->required();
    sal->add_option("--layer", sal_layer, "tap layer (defaults to last conv block)");
    sal->add_option("--out", sal_out, "output map (.pgm)")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "batch NSS/CC evaluation");
    std::string ev_model, ev_data, ev_csv, ev_maps;
    std::vector<std::string> ev_methods{"implicit", "feedforward", "gradcam", "gbp"};
    std::vector<std::string> ev_layers;
    std::vector<double> ev_radii{0, 1, 2, 3, 4};
    ev->add_option("--model", ev_model, "model path")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--methods", ev_methods, "comma-separated methods")->delimiter(',');
    ev->add_option("--layers", ev_layers, "comma-separated tap layers (default: all conv blocks)")->delimiter(',');
    ev->add_option("--blur-radii", ev_radii, "comma-separated blur radii")->delimiter(',');
    ev->add_option("--out-csv", ev_csv, "output CSV path")->required();
    ev->add_option("--out-maps", ev_maps, "directory for saliency map PGMs");

    // sweep-layers
    auto* sw = app.add_subcommand("sweep-layers", "evaluate one method across every conv block");
    std::string sw_model, sw_data, sw_method, sw_csv;
    sw->add_option("--model", sw_model, "model path")->required();
    sw->add_option("--data", sw_data, "dataset directory")->required();
    sw->add_option("--method", sw_method, "implicit|feedforward|gradcam|gbp")->required();
    sw->add_option("--out-csv", sw_csv, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gen->parsed()) {
        const auto manifest = isal::generate_synthetic_dataset(gen_out, gen_count, gen_classes, gen_seed);
        std::printf("wrote %zu images under %s\n", manifest.records.size(), gen_out.c_str());
        return kExitOk;
    }
    if (tr->parsed()) {
        const auto data = isal::load_manifest(tr_data, "train");
        auto model = isal::build_toy_cnn(data.class_count, tr_seed);
        const auto result = isal::train(model, data, {tr_epochs, tr_lr, tr_batch, tr_seed});
        isal::save_model(result.model, tr_out);
        std::printf("trained %zu epochs, final train accuracy %.4f, model %s\n", tr_epochs,
                    result.final_train_accuracy, tr_out.c_str());
        return kExitOk;
    }
    if (sal->parsed()) {
        const auto model = isal::load_model(sal_model);
        const auto image = isal::load_ppm(sal_image);
        const std::size_t h = image.extent(1), w = image.extent(2);
        const auto method = isal::method_from_string(sal_method);
        std::string layer = sal_layer.empty() ? default_tap_layer(model) : sal_layer;
        isal::SaliencyMap map;
        switch (method) {
            case isal::SaliencyMethod::implicit: map = isal::implicit_saliency(model, image, layer, h, w); break;
            case isal::SaliencyMethod::feedforward: map = isal::feedforward_saliency(model, image, layer, h, w); break;
            case isal::SaliencyMethod::gradcam: map = isal::grad_cam(model, image, layer, h, w); break;
            case isal::SaliencyMethod::gbp: map = isal::guided_bp_saliency(model, image, h, w); break;
        }
        isal::save_map_pgm(map, sal_out);
        std::printf("wrote %s\n", sal_out.c_str());
        return kExitOk;
    }
    if (ev->parsed()) {
        const auto model = isal::load_model(ev_model);
        const auto data = isal::load_manifest(ev_data, "eval");
        std::vector<isal::SaliencyMethod> methods;
        for (const auto& name : ev_methods) methods.push_back(isal::method_from_string(name));
        if (ev_layers.empty()) ev_layers = model.conv_layer_names();
        isal::EvalOptions opts;
        if (!ev_maps.empty()) opts.maps_dir = ev_maps;
        const auto report = isal::run_eval(model, data, methods, ev_layers, ev_radii, opts);
        isal::write_report_csv(report, ev_csv);
        print_aggregates(report);
        std::printf("model %s, dataset seed %llu, %zu records -> %s\n", report.provenance.model_hash.c_str(),
                    static_cast<unsigned long long>(report.provenance.dataset_seed), report.records.size(),
                    ev_csv.c_str());
        return kExitOk;
    }
    if (sw->parsed()) {
        const auto model = isal::load_model(sw_model);
        const auto data = isal::load_manifest(sw_data, "eval");
        const auto result = isal::layer_sweep(model, data, isal::method_from_string(sw_method));
        isal::write_report_csv(result.report, sw_csv);
        print_aggregates(result.report);
        std::printf("stability drop: nss %.4f, cc %.4f\n", result.nss_stability_drop, result.cc_stability_drop);
        return kExitOk;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const isal::FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kExitData;
    } catch (const isal::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const isal::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitData;
    } catch (const isal::UnknownLayer& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const isal::InvalidConfig& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const isal::ShapeMismatch& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
}
