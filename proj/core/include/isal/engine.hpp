#pragma once

#include <string_view>
#include <vector>

#include "isal/network.hpp"
#include "isal/tensor.hpp"

namespace isal {

// Reverse-mode differentiation over the fixed layer vocabulary. All functions
// are pure; 64-bit arithmetic throughout. Conv is stride 1 with zero padding
// that preserves the spatial size (odd kernels only); maxpool is 2x2 stride 2
// with ties broken by first row-major occurrence.

std::vector<std::size_t> layer_output_shape(const LayerSpec& layer, const std::vector<std::size_t>& in);

// Checks layer names are unique and the chain composes from input_shape to
// a logits vector of length class_count. Throws InvalidModel.
void validate_model(const NetworkModel& model);

ActivationTrace forward(const NetworkModel& model, const Tensor& input);

struct CrossEntropyResult {
    double loss;
    Tensor grad_logits;  // softmax(logits) - onehot(class_index)
};

// -log softmax(logits)[class_index], max-subtraction stabilized.
CrossEntropyResult cross_entropy(const Tensor& logits, std::size_t class_index);

Tensor softmax(const Tensor& logits);

// Where a tap lands when it names a conv block: on the conv output itself or
// on the ReLU activation that consumes it.
enum class TapMode { post_relu, pre_relu };

// d(loss)/d(activation of tap_layer). With TapMode::post_relu (default) a tap
// naming a conv layer whose output feeds a ReLU resolves to that ReLU's output.
Tensor backward_to_layer(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits,
                         std::string_view tap_layer, TapMode mode = TapMode::post_relu);

Tensor backward_to_input(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits);

// Backward to the input with the guided rule at every ReLU: gradient passes
// only where the forward activation is positive and the incoming gradient is
// positive.
Tensor guided_backward_to_input(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits);

// Per-layer parameter gradients; entries for layers without parameters stay empty.
struct ParamGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> bias;
};

ParamGrads backward_params(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits);

// Index of the layer a tap resolves to under the given mode.
std::size_t resolve_tap(const NetworkModel& model, std::string_view tap_layer, TapMode mode);

}  // namespace isal
