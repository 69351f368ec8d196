#include "isal/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "isal/errors.hpp"

namespace isal {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const auto half = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double d = static_cast<double>(i) - static_cast<double>(half);
        k[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// One separable pass over a single [H, W] plane with clamp-to-edge sampling.
void blur_plane(const double* src, double* dst, std::size_t h, std::size_t w, const std::vector<double>& kernel) {
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    std::vector<double> tmp(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < kernel.size(); ++t) {
                auto sx = static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(t) - half;
                sx = std::clamp<std::ptrdiff_t>(sx, 0, static_cast<std::ptrdiff_t>(w) - 1);
                acc += kernel[t] * src[y * w + static_cast<std::size_t>(sx)];
            }
            tmp[y * w + x] = acc;
        }
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < kernel.size(); ++t) {
                auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(t) - half;
                sy = std::clamp<std::ptrdiff_t>(sy, 0, static_cast<std::ptrdiff_t>(h) - 1);
                acc += kernel[t] * tmp[static_cast<std::size_t>(sy) * w + x];
            }
            dst[y * w + x] = acc;
        }
    }
}

}  // namespace

Tensor gaussian_blur(const Tensor& image, const BlurSpec& spec) {
    if (spec.radius < 0.0) throw InvalidConfig("blur radius must be non-negative");
    if (spec.radius == 0.0) return image;
    if (image.rank() != 2 && image.rank() != 3) {
        throw ShapeMismatch("gaussian_blur expects [H, W] or [C, H, W], got " + shape_to_string(image.shape()));
    }
    const auto kernel = gaussian_kernel(spec.radius);
    Tensor out(image.shape());
    if (image.rank() == 2) {
        blur_plane(image.data(), out.data(), image.extent(0), image.extent(1), kernel);
    } else {
        const std::size_t c_n = image.extent(0), h = image.extent(1), w = image.extent(2);
        for (std::size_t c = 0; c < c_n; ++c) {
            blur_plane(image.data() + c * h * w, out.data() + c * h * w, h, w, kernel);
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& grid, std::size_t target_h, std::size_t target_w) {
    if (grid.rank() != 2) throw ShapeMismatch("resize_bilinear expects a [H, W] grid");
    if (target_h == 0 || target_w == 0) throw InvalidConfig("resize target must be positive");
    const std::size_t h = grid.extent(0), w = grid.extent(1);
    if (target_h == h && target_w == w) return grid;
    Tensor out({target_h, target_w});
    const double sy = static_cast<double>(h) / static_cast<double>(target_h);
    const double sx = static_cast<double>(w) / static_cast<double>(target_w);
    for (std::size_t oy = 0; oy < target_h; ++oy) {
        double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t ox = 0; ox < target_w; ++ox) {
            double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = grid(y0, x0) * (1.0 - wx) + grid(y0, x1) * wx;
            const double bot = grid(y1, x0) * (1.0 - wx) + grid(y1, x1) * wx;
            out(oy, ox) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

Tensor resize_bilinear_chw(const Tensor& image, std::size_t target_h, std::size_t target_w) {
    if (image.rank() != 3) throw ShapeMismatch("resize_bilinear_chw expects [C, H, W]");
    const std::size_t c_n = image.extent(0), h = image.extent(1), w = image.extent(2);
    if (target_h == h && target_w == w) return image;
    Tensor out({c_n, target_h, target_w});
    for (std::size_t c = 0; c < c_n; ++c) {
        Tensor plane({h, w});
        std::copy_n(image.data() + c * h * w, h * w, plane.data());
        const Tensor resized = resize_bilinear(plane, target_h, target_w);
        std::copy_n(resized.data(), target_h * target_w, out.data() + c * target_h * target_w);
    }
    return out;
}

}  // namespace isal
