#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "isal/engine.hpp"
#include "isal/network.hpp"
#include "isal/tensor.hpp"

namespace isal {

// A one-hot class vector imposed on the network as conflicting information.
// The predicted class itself also qualifies: the network is never fully sure,
// so its own decision still produces a non-zero loss.
struct UnexpectedStimulus {
    std::size_t class_index;

    Tensor onehot(std::size_t class_count) const;
};

// Per-class absolute conflict gradients at a tapped conv block,
// indexed [class, filter, row, col].
struct PseudoSaliencyStack {
    Tensor values;  // [N_c, K, H_f, W_f], all entries >= 0
    std::string tap_layer;

    std::size_t class_count() const { return values.extent(0); }
    std::size_t filter_count() const { return values.extent(1); }
};

// Class-dimension statistics of a stack; every field is [K, H_f, W_f].
// var is the population variance (divide by N_c); var_norm is in [0, 1].
struct ClassStats {
    Tensor mu;
    Tensor var;
    Tensor var_norm;
};

// How the variance mask is scaled to [0, 1]: independently per filter over
// spatial positions (default) or with one global min-max over the whole stack.
// Zero-range slices map to all-zeros, a neutral mask.
enum class NormMode { per_filter, global };

enum class SaliencySpace { feature, image };
enum class SaliencyMethod { implicit, feedforward, gradcam, gbp };

struct SaliencyMap {
    Tensor values;  // [H, W], nonnegative; [0, 255] once finalized
    SaliencySpace space = SaliencySpace::feature;
    SaliencyMethod method = SaliencyMethod::implicit;
};

struct SaliencyOptions {
    TapMode tap = TapMode::post_relu;
    NormMode norm = NormMode::per_filter;
};

// One forward pass, then one conflict backward pass per class: the gradient
// of the cross-entropy against every one-hot stimulus, taken elementwise
// absolute at the tapped conv block.
PseudoSaliencyStack pseudo_saliency_stack(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                                          const SaliencyOptions& opts = {});

ClassStats class_statistics(const PseudoSaliencyStack& stack, NormMode norm = NormMode::per_filter);

// Mean over filters of (1 - var_norm) * mu: settled (low class-variance)
// regions keep their weight, class-dependent regions are suppressed.
SaliencyMap combine_implicit(const ClassStats& stats);

// Full pipeline: stack -> statistics -> combination -> bilinear upsample to
// the target size -> min-max rescale to [0, 255] (constant maps become zero).
SaliencyMap implicit_saliency(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                              std::size_t target_h, std::size_t target_w, const SaliencyOptions& opts = {});

// Expectancy-only baseline: the same statistics applied to |activations| of
// the tapped block. Activations carry no class axis, so the ensemble axis is
// the filter axis and the combination consumes it.
SaliencyMap feedforward_saliency(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                                 std::size_t target_h, std::size_t target_w, const SaliencyOptions& opts = {});

// relu(sum_k alpha_k * A_k) with alpha_k the spatial mean of the raw class
// logit's gradient at the tap (the logit, not the loss).
SaliencyMap grad_cam(const NetworkModel& model, const Tensor& image, std::string_view tap_layer, std::size_t target_h,
                     std::size_t target_w, std::optional<std::size_t> class_choice = std::nullopt,
                     const SaliencyOptions& opts = {});

// Guided backpropagation of the class logit to the input, channels collapsed
// by the sum of absolute values. Already image-resolution.
SaliencyMap guided_bp_saliency(const NetworkModel& model, const Tensor& image, std::size_t target_h,
                               std::size_t target_w, std::optional<std::size_t> class_choice = std::nullopt);

// Weighted feature-map combination behind grad_cam, exposed for verification.
Tensor gradcam_combine(const Tensor& activations, const std::vector<double>& alphas);

// Bilinear upsample + min-max rescale to [0, 255]; constant maps go to zero.
Tensor finalize_map(const Tensor& feature_map, std::size_t target_h, std::size_t target_w);

// P5 output of a finalized map; values are already in [0, 255] and are
// rounded half-up.
void save_map_pgm(const SaliencyMap& map, const std::filesystem::path& path);

const char* to_string(SaliencyMethod method);
SaliencyMethod method_from_string(std::string_view name);

}  // namespace isal
