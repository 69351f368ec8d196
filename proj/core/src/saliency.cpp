#include "isal/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "isal/errors.hpp"
#include "isal/imaging.hpp"
#include "isal/pnm.hpp"

namespace isal {

namespace {

std::size_t tap_conv_index(const NetworkModel& model, std::string_view tap_layer) {
    const std::size_t i = model.layer_index(tap_layer);
    if (model.layers[i].kind != LayerKind::conv2d) {
        throw UnknownLayer("tap layer '" + std::string(tap_layer) + "' is not a conv block");
    }
    return i;
}

// Activation of the tapped conv block under the given tap mode.
const Tensor& tapped_activation(const NetworkModel& model, const ActivationTrace& trace, std::string_view tap_layer,
                                TapMode mode) {
    tap_conv_index(model, tap_layer);
    return trace.outputs[resolve_tap(model, tap_layer, mode)];
}

void minmax_rescale_255(Tensor& map) {
    const double lo = map.min();
    const double hi = map.max();
    if (hi > lo) {
        const double scale = 255.0 / (hi - lo);
        for (double& v : map.flat()) v = (v - lo) * scale;
    } else {
        for (double& v : map.flat()) v = 0.0;
    }
}

std::size_t argmax_class(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return best;
}

}  // namespace

Tensor UnexpectedStimulus::onehot(std::size_t class_count) const {
    if (class_index >= class_count) {
        throw IndexOutOfRange("stimulus class " + std::to_string(class_index) + " out of range for " +
                              std::to_string(class_count) + " classes");
    }
    Tensor v({class_count});
    v[class_index] = 1.0;
    return v;
}

PseudoSaliencyStack pseudo_saliency_stack(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                                          const SaliencyOptions& opts) {
    tap_conv_index(model, tap_layer);
    const ActivationTrace trace = forward(model, image);

    PseudoSaliencyStack stack;
    stack.tap_layer = std::string(tap_layer);
    const std::size_t n_classes = model.class_count;
    // the single forward trace is reused across every per-class backward pass
    for (std::size_t i = 0; i < n_classes; ++i) {
        const UnexpectedStimulus stimulus{i};
        const auto ce = cross_entropy(trace.logits(), stimulus.class_index);
        Tensor grad = backward_to_layer(model, trace, ce.grad_logits, tap_layer, opts.tap);
        if (i == 0) {
            auto shape = grad.shape();
            shape.insert(shape.begin(), n_classes);
            stack.values = Tensor(std::move(shape));
        }
        double* dst = stack.values.data() + i * grad.size();
        for (std::size_t j = 0; j < grad.size(); ++j) dst[j] = std::abs(grad[j]);
    }
    return stack;
}

ClassStats class_statistics(const PseudoSaliencyStack& stack, NormMode norm) {
    const std::size_t n_classes = stack.class_count();
    const std::size_t k_n = stack.filter_count();
    const std::size_t h = stack.values.extent(2), w = stack.values.extent(3);
    const std::size_t plane = k_n * h * w;

    ClassStats stats;
    stats.mu = Tensor({k_n, h, w});
    stats.var = Tensor({k_n, h, w});

    const double* r = stack.values.data();
    for (std::size_t p = 0; p < plane; ++p) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n_classes; ++i) mean += r[i * plane + p];
        mean /= static_cast<double>(n_classes);
        double var = 0.0;
        for (std::size_t i = 0; i < n_classes; ++i) {
            const double d = r[i * plane + p] - mean;
            var += d * d;
        }
        stats.mu[p] = mean;
        stats.var[p] = var / static_cast<double>(n_classes);
    }

    stats.var_norm = stats.var;
    if (norm == NormMode::per_filter) {
        for (std::size_t k = 0; k < k_n; ++k) {
            double* slice = stats.var_norm.data() + k * h * w;
            const auto [lo_it, hi_it] = std::minmax_element(slice, slice + h * w);
            const double lo = *lo_it, hi = *hi_it;
            if (hi > lo) {
                for (std::size_t p = 0; p < h * w; ++p) slice[p] = (slice[p] - lo) / (hi - lo);
            } else {
                for (std::size_t p = 0; p < h * w; ++p) slice[p] = 0.0;
            }
        }
    } else {
        const double lo = stats.var_norm.min();
        const double hi = stats.var_norm.max();
        if (hi > lo) {
            for (double& v : stats.var_norm.flat()) v = (v - lo) / (hi - lo);
        } else {
            for (double& v : stats.var_norm.flat()) v = 0.0;
        }
    }
    return stats;
}

SaliencyMap combine_implicit(const ClassStats& stats) {
    const std::size_t k_n = stats.mu.extent(0);
    const std::size_t h = stats.mu.extent(1), w = stats.mu.extent(2);
    SaliencyMap map;
    map.space = SaliencySpace::feature;
    map.method = SaliencyMethod::implicit;
    map.values = Tensor({h, w});
    for (std::size_t k = 0; k < k_n; ++k) {
        const double* mu = stats.mu.data() + k * h * w;
        const double* vn = stats.var_norm.data() + k * h * w;
        for (std::size_t p = 0; p < h * w; ++p) {
            map.values[p] += (1.0 - vn[p]) * mu[p];
        }
    }
    for (double& v : map.values.flat()) v /= static_cast<double>(k_n);
    return map;
}

Tensor finalize_map(const Tensor& feature_map, std::size_t target_h, std::size_t target_w) {
    Tensor map = resize_bilinear(feature_map, target_h, target_w);
    minmax_rescale_255(map);
    return map;
}

SaliencyMap implicit_saliency(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                              std::size_t target_h, std::size_t target_w, const SaliencyOptions& opts) {
    const PseudoSaliencyStack stack = pseudo_saliency_stack(model, image, tap_layer, opts);
    const ClassStats stats = class_statistics(stack, opts.norm);
    SaliencyMap map = combine_implicit(stats);
    map.values = finalize_map(map.values, target_h, target_w);
    map.space = SaliencySpace::image;
    return map;
}

SaliencyMap feedforward_saliency(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                                 std::size_t target_h, std::size_t target_w, const SaliencyOptions& opts) {
    const ActivationTrace trace = forward(model, image);
    const Tensor& act = tapped_activation(model, trace, tap_layer, opts.tap);
    const std::size_t k_n = act.extent(0), h = act.extent(1), w = act.extent(2);

    // per-filter |activation| plays the pseudo-map role; mu and var run over
    // the filter axis and consume it
    Tensor mu({h, w});
    Tensor var({h, w});
    for (std::size_t p = 0; p < h * w; ++p) {
        double mean = 0.0;
        for (std::size_t k = 0; k < k_n; ++k) mean += std::abs(act[k * h * w + p]);
        mean /= static_cast<double>(k_n);
        double v = 0.0;
        for (std::size_t k = 0; k < k_n; ++k) {
            const double d = std::abs(act[k * h * w + p]) - mean;
            v += d * d;
        }
        mu[p] = mean;
        var[p] = v / static_cast<double>(k_n);
    }

    Tensor var_norm = var;
    const double lo = var_norm.min();
    const double hi = var_norm.max();
    if (hi > lo) {
        for (double& v : var_norm.flat()) v = (v - lo) / (hi - lo);
    } else {
        for (double& v : var_norm.flat()) v = 0.0;
    }

    SaliencyMap map;
    map.method = SaliencyMethod::feedforward;
    map.space = SaliencySpace::image;
    map.values = Tensor({h, w});
    for (std::size_t p = 0; p < h * w; ++p) map.values[p] = (1.0 - var_norm[p]) * mu[p];
    map.values = finalize_map(map.values, target_h, target_w);
    return map;
}

Tensor gradcam_combine(const Tensor& activations, const std::vector<double>& alphas) {
    const std::size_t k_n = activations.extent(0);
    const std::size_t h = activations.extent(1), w = activations.extent(2);
    if (alphas.size() != k_n) throw ShapeMismatch("alpha count does not match filter count");
    Tensor map({h, w});
    for (std::size_t k = 0; k < k_n; ++k) {
        const double* a = activations.data() + k * h * w;
        for (std::size_t p = 0; p < h * w; ++p) map[p] += alphas[k] * a[p];
    }
    for (double& v : map.flat()) v = v > 0.0 ? v : 0.0;
    return map;
}

SaliencyMap grad_cam(const NetworkModel& model, const Tensor& image, std::string_view tap_layer, std::size_t target_h,
                     std::size_t target_w, std::optional<std::size_t> class_choice, const SaliencyOptions& opts) {
    tap_conv_index(model, tap_layer);
    const ActivationTrace trace = forward(model, image);
    const std::size_t cls = class_choice.value_or(argmax_class(trace.logits()));

    // raw logit gradient, not the loss gradient
    const Tensor grad_logits = UnexpectedStimulus{cls}.onehot(model.class_count);
    const Tensor grad = backward_to_layer(model, trace, grad_logits, tap_layer, opts.tap);
    const Tensor& act = tapped_activation(model, trace, tap_layer, opts.tap);

    const std::size_t k_n = act.extent(0), h = act.extent(1), w = act.extent(2);
    std::vector<double> alphas(k_n);
    for (std::size_t k = 0; k < k_n; ++k) {
        double mean = 0.0;
        const double* g = grad.data() + k * h * w;
        for (std::size_t p = 0; p < h * w; ++p) mean += g[p];
        alphas[k] = mean / static_cast<double>(h * w);
    }

    SaliencyMap map;
    map.method = SaliencyMethod::gradcam;
    map.space = SaliencySpace::image;
    map.values = finalize_map(gradcam_combine(act, alphas), target_h, target_w);
    return map;
}

SaliencyMap guided_bp_saliency(const NetworkModel& model, const Tensor& image, std::size_t target_h,
                               std::size_t target_w, std::optional<std::size_t> class_choice) {
    const ActivationTrace trace = forward(model, image);
    const std::size_t cls = class_choice.value_or(argmax_class(trace.logits()));
    const Tensor grad_logits = UnexpectedStimulus{cls}.onehot(model.class_count);
    const Tensor grad = guided_backward_to_input(model, trace, grad_logits);

    // collapse the depth dimension by summed absolute values
    Tensor collapsed;
    if (grad.rank() == 3) {
        const std::size_t c_n = grad.extent(0), h = grad.extent(1), w = grad.extent(2);
        collapsed = Tensor({h, w});
        for (std::size_t c = 0; c < c_n; ++c) {
            const double* g = grad.data() + c * h * w;
            for (std::size_t p = 0; p < h * w; ++p) collapsed[p] += std::abs(g[p]);
        }
    } else if (grad.rank() == 2) {
        collapsed = grad;
        for (double& v : collapsed.flat()) v = std::abs(v);
    } else {
        collapsed = Tensor({1, grad.size()});
        for (std::size_t i = 0; i < grad.size(); ++i) collapsed[i] = std::abs(grad[i]);
    }

    SaliencyMap map;
    map.method = SaliencyMethod::gbp;
    map.space = SaliencySpace::image;
    map.values = finalize_map(collapsed, target_h, target_w);
    return map;
}

void save_map_pgm(const SaliencyMap& map, const std::filesystem::path& path) {
    save_pgm255(map.values, path);
}

const char* to_string(SaliencyMethod method) {
    switch (method) {
        case SaliencyMethod::implicit: return "implicit";
        case SaliencyMethod::feedforward: return "feedforward";
        case SaliencyMethod::gradcam: return "gradcam";
        case SaliencyMethod::gbp: return "gbp";
    }
    return "?";
}

SaliencyMethod method_from_string(std::string_view name) {
    if (name == "implicit") return SaliencyMethod::implicit;
    if (name == "feedforward") return SaliencyMethod::feedforward;
    if (name == "gradcam") return SaliencyMethod::gradcam;
    if (name == "gbp") return SaliencyMethod::gbp;
    throw InvalidConfig("unknown saliency method '" + std::string(name) + "'");
}

}  // namespace isal
