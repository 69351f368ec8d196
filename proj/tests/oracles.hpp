#pragma once

// Independent reference implementations used to cross-check the engine and
// the saliency pipeline. Everything here is deliberately written as plain
// scalar loops, separate from the code paths under test.

#include <cstddef>
#include <string_view>
#include <vector>

#include "isal/engine.hpp"
#include "isal/network.hpp"
#include "isal/rng.hpp"
#include "isal/saliency.hpp"
#include "isal/tensor.hpp"

namespace isal::oracle {

// Six nested loops, zero same-padding, stride 1.
Tensor conv2d_6loop(const Tensor& in, const Tensor& kernel, const Tensor& bias);

// Input gradient of the same convolution, also six nested loops.
Tensor conv2d_6loop_input_grad(const Tensor& gout, const Tensor& kernel, std::size_t in_ch, std::size_t h,
                               std::size_t w);

// Straight-line scalar forward pass over every layer.
std::vector<Tensor> forward_all(const NetworkModel& model, const Tensor& input);

// Logits obtained by running the layers after `layer_index` on the given
// activation (treated as that layer's output).
Tensor forward_from(const NetworkModel& model, std::size_t layer_index, const Tensor& activation);

// -log softmax via direct exponentials (unstabilized route).
double cross_entropy_loss(const Tensor& logits, std::size_t class_index);

// Pseudo-saliency stack recomputed the expensive way: one full forward pass
// per class instead of a shared trace.
Tensor stack_recompute_per_class(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                                 TapMode mode);

// Scalar-loop class statistics of a [N_c, K, H, W] stack.
void stats_scalar(const Tensor& stack, Tensor& mu, Tensor& var);

// Pearson correlation through the raw-moment formula.
double cc_raw_moments(const Tensor& a, const Tensor& b);

// Pointwise align-corners-false bilinear sample formula.
double bilinear_point(const Tensor& grid, std::size_t target_h, std::size_t target_w, std::size_t oy, std::size_t ox);

// Central finite difference (f(x+h) - f(x-h)) / 2h.
template <class F>
double central_diff(F&& f, double& slot, double h = 1e-5) {
    const double saved = slot;
    slot = saved + h;
    const double hi = f();
    slot = saved - h;
    const double lo = f();
    slot = saved;
    return (hi - lo) / (2.0 * h);
}

// |a-b| relative to magnitudes, with an absolute floor for near-zero pairs.
double rel_err(double a, double b);

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo, double hi);

// Small random model from the allowed layer vocabulary: conv/relu/pool
// blocks on a square input, then flatten and a linear head.
NetworkModel random_conv_model(Rng& rng);

}  // namespace isal::oracle
