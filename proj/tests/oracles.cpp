#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace isal::oracle {

Tensor conv2d_6loop(const Tensor& in, const Tensor& kernel, const Tensor& bias) {
    const std::size_t oc_n = kernel.extent(0), ic_n = kernel.extent(1);
    const std::size_t kh = kernel.extent(2), kw = kernel.extent(3);
    const std::size_t h = in.extent(1), w = in.extent(2);
    const auto ph = static_cast<long>((kh - 1) / 2), pw = static_cast<long>((kw - 1) / 2);
    Tensor out({oc_n, h, w});
    for (std::size_t oc = 0; oc < oc_n; ++oc)
        for (std::size_t oy = 0; oy < h; ++oy)
            for (std::size_t ox = 0; ox < w; ++ox) {
                double acc = bias[oc];
                for (std::size_t ic = 0; ic < ic_n; ++ic)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long iy = static_cast<long>(oy + ky) - ph;
                            const long ix = static_cast<long>(ox + kx) - pw;
                            if (iy < 0 || iy >= static_cast<long>(h) || ix < 0 || ix >= static_cast<long>(w)) continue;
                            acc += in(ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                                   kernel(oc, ic, ky, kx);
                        }
                out(oc, oy, ox) = acc;
            }
    return out;
}

Tensor conv2d_6loop_input_grad(const Tensor& gout, const Tensor& kernel, std::size_t in_ch, std::size_t h,
                               std::size_t w) {
    const std::size_t oc_n = kernel.extent(0);
    const std::size_t kh = kernel.extent(2), kw = kernel.extent(3);
    const auto ph = static_cast<long>((kh - 1) / 2), pw = static_cast<long>((kw - 1) / 2);
    Tensor gin({in_ch, h, w});
    for (std::size_t ic = 0; ic < in_ch; ++ic)
        for (std::size_t iy = 0; iy < h; ++iy)
            for (std::size_t ix = 0; ix < w; ++ix) {
                double acc = 0.0;
                for (std::size_t oc = 0; oc < oc_n; ++oc)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long oy = static_cast<long>(iy) - static_cast<long>(ky) + ph;
                            const long ox = static_cast<long>(ix) - static_cast<long>(kx) + pw;
                            if (oy < 0 || oy >= static_cast<long>(h) || ox < 0 || ox >= static_cast<long>(w)) continue;
                            acc += gout(oc, static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) *
                                   kernel(oc, ic, ky, kx);
                        }
                gin(ic, iy, ix) = acc;
            }
    return gin;
}

namespace {

Tensor apply_layer_scalar(const LayerSpec& layer, const Tensor& in) {
    switch (layer.kind) {
        case LayerKind::conv2d:
            return conv2d_6loop(in, layer.weights, layer.bias);
        case LayerKind::relu: {
            Tensor out = in;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
            return out;
        }
        case LayerKind::maxpool2x2: {
            const std::size_t c_n = in.extent(0), h = in.extent(1) / 2, w = in.extent(2) / 2;
            Tensor out({c_n, h, w});
            for (std::size_t c = 0; c < c_n; ++c)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x = 0; x < w; ++x) {
                        double m = in(c, 2 * y, 2 * x);
                        m = std::max(m, in(c, 2 * y, 2 * x + 1));
                        m = std::max(m, in(c, 2 * y + 1, 2 * x));
                        m = std::max(m, in(c, 2 * y + 1, 2 * x + 1));
                        out(c, y, x) = m;
                    }
            return out;
        }
        case LayerKind::flatten:
            return in.reshaped({in.size()});
        case LayerKind::linear: {
            const std::size_t out_n = layer.weights.extent(0), in_n = layer.weights.extent(1);
            Tensor out({out_n});
            for (std::size_t o = 0; o < out_n; ++o) {
                double acc = layer.bias[o];
                for (std::size_t i = 0; i < in_n; ++i) acc += layer.weights(o, i) * in[i];
                out[o] = acc;
            }
            return out;
        }
    }
    throw std::logic_error("unknown layer kind");
}

}  // namespace

std::vector<Tensor> forward_all(const NetworkModel& model, const Tensor& input) {
    std::vector<Tensor> outputs;
    const Tensor* cur = &input;
    for (const auto& layer : model.layers) {
        outputs.push_back(apply_layer_scalar(layer, *cur));
        cur = &outputs.back();
    }
    return outputs;
}

Tensor forward_from(const NetworkModel& model, std::size_t layer_index, const Tensor& activation) {
    Tensor cur = activation;
    for (std::size_t j = layer_index + 1; j < model.layers.size(); ++j) {
        cur = apply_layer_scalar(model.layers[j], cur);
    }
    return cur;
}

double cross_entropy_loss(const Tensor& logits, std::size_t class_index) {
    double sum = 0.0;
    for (double v : logits.flat()) sum += std::exp(v);
    return std::log(sum) - logits[class_index];
}

Tensor stack_recompute_per_class(const NetworkModel& model, const Tensor& image, std::string_view tap_layer,
                                 TapMode mode) {
    Tensor stack;
    for (std::size_t i = 0; i < model.class_count; ++i) {
        const ActivationTrace trace = forward(model, image);  // full forward per class
        const auto ce = cross_entropy(trace.logits(), i);
        const Tensor grad = backward_to_layer(model, trace, ce.grad_logits, tap_layer, mode);
        if (i == 0) {
            auto shape = grad.shape();
            shape.insert(shape.begin(), model.class_count);
            stack = Tensor(std::move(shape));
        }
        for (std::size_t j = 0; j < grad.size(); ++j) stack[i * grad.size() + j] = std::abs(grad[j]);
    }
    return stack;
}

void stats_scalar(const Tensor& stack, Tensor& mu, Tensor& var) {
    const std::size_t n = stack.extent(0), k_n = stack.extent(1), h = stack.extent(2), w = stack.extent(3);
    mu = Tensor({k_n, h, w});
    var = Tensor({k_n, h, w});
    for (std::size_t k = 0; k < k_n; ++k)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double mean = 0.0;
                for (std::size_t i = 0; i < n; ++i) mean += stack(i, k, y, x);
                mean /= static_cast<double>(n);
                double v = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = stack(i, k, y, x) - mean;
                    v += d * d;
                }
                mu(k, y, x) = mean;
                var(k, y, x) = v / static_cast<double>(n);
            }
}

double cc_raw_moments(const Tensor& a, const Tensor& b) {
    const auto n = static_cast<double>(a.size());
    double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double va = saa / n - (sa / n) * (sa / n);
    const double vb = sbb / n - (sb / n) * (sb / n);
    return cov / std::sqrt(va * vb);
}

double bilinear_point(const Tensor& grid, std::size_t target_h, std::size_t target_w, std::size_t oy, std::size_t ox) {
    const std::size_t h = grid.extent(0), w = grid.extent(1);
    auto clampd = [](double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); };
    const double fy = clampd((oy + 0.5) * static_cast<double>(h) / static_cast<double>(target_h) - 0.5, 0.0,
                             static_cast<double>(h - 1));
    const double fx = clampd((ox + 0.5) * static_cast<double>(w) / static_cast<double>(target_w) - 0.5, 0.0,
                             static_cast<double>(w - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const auto x0 = static_cast<std::size_t>(fx);
    const std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
    const double wy = fy - static_cast<double>(y0), wx = fx - static_cast<double>(x0);
    return (1 - wy) * ((1 - wx) * grid(y0, x0) + wx * grid(y0, x1)) +
           wy * ((1 - wx) * grid(y1, x0) + wx * grid(y1, x1));
}

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.flat()) v = rng.uniform(lo, hi);
    return t;
}

NetworkModel random_conv_model(Rng& rng) {
    NetworkModel m;
    const std::size_t channels = 1 + rng.index(3);
    const std::size_t side = rng.index(2) == 0 ? 4 : 8;
    m.input_shape = {channels, side, side};
    m.class_count = 2 + rng.index(3);

    std::size_t cur_ch = channels;
    std::size_t cur_side = side;
    const std::size_t blocks = 1 + rng.index(2);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t out_ch = 1 + rng.index(4);
        const std::size_t k = rng.index(2) == 0 ? 1 : 3;
        LayerSpec conv{LayerKind::conv2d, "conv" + std::to_string(b + 1), Tensor({out_ch, cur_ch, k, k}),
                       Tensor({out_ch})};
        conv.weights = random_tensor(rng, conv.weights.shape(), -0.8, 0.8);
        conv.bias = random_tensor(rng, conv.bias.shape(), -0.2, 0.2);
        m.layers.push_back(std::move(conv));
        m.layers.push_back({LayerKind::relu, "relu" + std::to_string(b + 1), {}, {}});
        if (cur_side >= 4 && rng.index(2) == 0) {
            m.layers.push_back({LayerKind::maxpool2x2, "pool" + std::to_string(b + 1), {}, {}});
            cur_side /= 2;
        }
        cur_ch = out_ch;
    }
    m.layers.push_back({LayerKind::flatten, "flatten", {}, {}});
    LayerSpec fc{LayerKind::linear, "fc", Tensor({m.class_count, cur_ch * cur_side * cur_side}),
                 Tensor({m.class_count})};
    fc.weights = random_tensor(rng, fc.weights.shape(), -0.5, 0.5);
    fc.bias = random_tensor(rng, fc.bias.shape(), -0.2, 0.2);
    m.layers.push_back(std::move(fc));
    validate_model(m);
    return m;
}

}  // namespace isal::oracle
