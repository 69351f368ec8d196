#include "isal/metrics.hpp"

#include <cmath>

#include "isal/errors.hpp"

namespace isal {

namespace {

struct Moments {
    double mean;
    double stddev;  // population
};

Moments moments(const Tensor& t) {
    const auto n = static_cast<double>(t.size());
    double mean = 0.0;
    for (double v : t.flat()) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : t.flat()) var += (v - mean) * (v - mean);
    var /= n;
    return {mean, std::sqrt(var)};
}

// Constant inputs can leave rounding residue in the variance; treat spread
// below 1e-12 of the mean magnitude as zero.
bool degenerate(const Moments& m) {
    return m.stddev == 0.0 || m.stddev <= std::abs(m.mean) * 1e-12;
}

}  // namespace

FixationMap FixationMap::from_grid(const Tensor& grid, double threshold) {
    if (grid.rank() != 2) throw ShapeMismatch("fixation map must be [H, W]");
    FixationMap f;
    f.mask = Tensor(grid.shape());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] > threshold) {
            f.mask[i] = 1.0;
            ++f.count;
        }
    }
    return f;
}

double nss(const Tensor& saliency, const FixationMap& fixations) {
    if (saliency.shape() != fixations.mask.shape()) {
        throw ShapeMismatch("saliency " + shape_to_string(saliency.shape()) + " vs fixation map " +
                            shape_to_string(fixations.mask.shape()));
    }
    if (fixations.count == 0) throw NoFixations("fixation map has no fixated pixels");
    const Moments m = moments(saliency);
    if (degenerate(m)) throw DegenerateMap("saliency map has zero spread, NSS undefined");
    double acc = 0.0;
    for (std::size_t i = 0; i < saliency.size(); ++i) {
        if (fixations.mask[i] != 0.0) acc += (saliency[i] - m.mean) / m.stddev;
    }
    return acc / static_cast<double>(fixations.count);
}

double cc(const Tensor& saliency, const DensityMap& density) {
    if (saliency.shape() != density.values.shape()) {
        throw ShapeMismatch("saliency " + shape_to_string(saliency.shape()) + " vs density map " +
                            shape_to_string(density.values.shape()));
    }
    const Moments ms = moments(saliency);
    const Moments md = moments(density.values);
    if (degenerate(ms)) throw DegenerateMap("saliency map has zero variance, CC undefined");
    if (degenerate(md)) throw DegenerateMap("density map has zero variance, CC undefined");
    double cov = 0.0;
    for (std::size_t i = 0; i < saliency.size(); ++i) {
        cov += (saliency[i] - ms.mean) * (density.values[i] - md.mean);
    }
    cov /= static_cast<double>(saliency.size());
    return cov / (ms.stddev * md.stddev);
}

}  // namespace isal
