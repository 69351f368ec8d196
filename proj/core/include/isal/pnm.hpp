#pragma once

#include <filesystem>

#include "isal/tensor.hpp"

namespace isal {

// Binary netpbm only (P5 / P6), maxval 255. Loads scale bytes to [0, 1];
// saves round half-up. FormatError carries the byte offset of the defect.

Tensor load_pgm(const std::filesystem::path& path);  // [H, W]
Tensor load_ppm(const std::filesystem::path& path);  // [3, H, W]

void save_pgm(const Tensor& grid01, const std::filesystem::path& path);
void save_ppm(const Tensor& image01, const std::filesystem::path& path);

// For grids whose values already live in [0, 255].
void save_pgm255(const Tensor& grid255, const std::filesystem::path& path);

// Half-up rounding used for every real -> byte conversion.
std::uint8_t quantize_byte(double v);

}  // namespace isal
