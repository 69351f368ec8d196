#pragma once

#include "isal/tensor.hpp"

namespace isal {

// Gaussian blur parameters. radius is the standard deviation in pixels;
// the kernel is truncated at ceil(3 * radius). radius 0 is the identity.
struct BlurSpec {
    double radius = 0.0;
};

// Separable Gaussian per channel, kernel normalized to sum 1, clamp-to-edge.
// Accepts [H, W] or [C, H, W].
Tensor gaussian_blur(const Tensor& image, const BlurSpec& spec);

// Align-corners-false bilinear sampling of a [H, W] grid. Bitwise identity
// when the target matches the source size.
Tensor resize_bilinear(const Tensor& grid, std::size_t target_h, std::size_t target_w);

// Channel-wise resize of a [C, H, W] tensor.
Tensor resize_bilinear_chw(const Tensor& image, std::size_t target_h, std::size_t target_w);

}  // namespace isal
