#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "isal/network.hpp"

namespace isal {

// Reference desk-scale architecture for 64x64 RGB input:
// conv(3->8,3x3)/relu/maxpool/conv(8->16,3x3)/relu/maxpool/flatten/linear(->class_count).
// Weights are seeded uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out));
// biases start at zero. class_count 1 is allowed (degenerate single-class model).
NetworkModel build_toy_cnn(std::size_t class_count, std::uint64_t seed);

// ISW1 container, all integers little-endian:
//   magic 0x49 0x53 0x57 0x31, u16 version=1, u32 layer count;
//   per layer: u8 kind tag (0=conv2d 1=relu 2=maxpool2x2 3=flatten 4=linear),
//   u8 name length + UTF-8 name, then per parameter tensor (conv: kernel, bias;
//   linear: weight, bias): u32 rank, u32 extents, raw little-endian f64 row-major;
//   trailing u32 class count.
std::vector<std::uint8_t> serialize_model(const NetworkModel& model);
NetworkModel parse_model(const std::vector<std::uint8_t>& bytes);

void save_model(const NetworkModel& model, const std::filesystem::path& path);
NetworkModel load_model(const std::filesystem::path& path);

// argmax of softmax(logits); ties resolve to the lowest index.
struct Prediction {
    std::size_t class_index;
    Tensor probabilities;
};
Prediction predict(const NetworkModel& model, const Tensor& image);

// FNV-1a over the serialized model bytes, as 16 hex digits.
std::string model_hash(const NetworkModel& model);

}  // namespace isal
