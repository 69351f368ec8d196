#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "isal/tensor.hpp"

namespace isal {

enum class LayerKind : std::uint8_t {
    conv2d = 0,
    relu = 1,
    maxpool2x2 = 2,
    flatten = 3,
    linear = 4,
};

const char* to_string(LayerKind kind);

// One layer of the straight pipeline. conv2d carries weights [out_ch, in_ch, kh, kw]
// and bias [out_ch]; linear carries weights [out_dim, in_dim] and bias [out_dim];
// the other kinds carry no parameters.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::string name;
    Tensor weights;
    Tensor bias;

    bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::linear; }

    friend bool operator==(const LayerSpec& a, const LayerSpec& b) {
        return a.kind == b.kind && a.name == b.name && a.weights == b.weights && a.bias == b.bias;
    }
};

struct ModelMeta {
    std::string name;
    std::uint64_t seed = 0;
    int epochs = 0;
};

// Ordered layer chain. Treated as immutable once built, trained, or loaded.
struct NetworkModel {
    std::vector<LayerSpec> layers;
    std::vector<std::size_t> input_shape;
    std::size_t class_count = 0;
    ModelMeta meta;  // not serialized, excluded from equality

    std::size_t layer_index(std::string_view name) const;  // throws UnknownLayer
    bool has_layer(std::string_view name) const;
    std::vector<std::string> conv_layer_names() const;

    friend bool operator==(const NetworkModel& a, const NetworkModel& b) {
        return a.layers == b.layers && a.input_shape == b.input_shape && a.class_count == b.class_count;
    }
};

// Outputs of every layer for one forward pass, in execution order.
struct ActivationTrace {
    Tensor input;
    std::vector<std::string> names;
    std::vector<Tensor> outputs;

    const Tensor& logits() const { return outputs.back(); }
    const Tensor& output_of(std::string_view layer_name) const;  // throws UnknownLayer
};

}  // namespace isal
