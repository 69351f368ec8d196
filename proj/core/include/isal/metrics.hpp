#pragma once

#include <cstddef>

#include "isal/tensor.hpp"

namespace isal {

// Binary eye-fixation locations.
struct FixationMap {
    Tensor mask;  // [H, W], entries 0 or 1
    std::size_t count = 0;

    static FixationMap from_grid(const Tensor& grid, double threshold = 0.5);
};

// Continuous ground-truth density in [0, 1], peak value 1 after normalization.
struct DensityMap {
    Tensor values;  // [H, W]
};

// Mean of the z-scored map at fixated pixels. The map is standardized with
// its population standard deviation. Throws DegenerateMap when the map has
// no spread, NoFixations when the fixation count is zero.
double nss(const Tensor& saliency, const FixationMap& fixations);

// Pearson correlation of the two flattened grids, in [-1, 1]. Throws
// DegenerateMap when either argument has zero variance.
double cc(const Tensor& saliency, const DensityMap& density);

}  // namespace isal
