#include "isal/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>

#include "isal/errors.hpp"

namespace isal {

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool2x2: return "maxpool2x2";
        case LayerKind::flatten: return "flatten";
        case LayerKind::linear: return "linear";
    }
    return "?";
}

std::size_t NetworkModel::layer_index(std::string_view name) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].name == name) return i;
    }
    throw UnknownLayer("no layer named '" + std::string(name) + "'");
}

bool NetworkModel::has_layer(std::string_view name) const {
    for (const auto& l : layers) {
        if (l.name == name) return true;
    }
    return false;
}

std::vector<std::string> NetworkModel::conv_layer_names() const {
    std::vector<std::string> names;
    for (const auto& l : layers) {
        if (l.kind == LayerKind::conv2d) names.push_back(l.name);
    }
    return names;
}

const Tensor& ActivationTrace::output_of(std::string_view layer_name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == layer_name) return outputs[i];
    }
    throw UnknownLayer("trace has no layer named '" + std::string(layer_name) + "'");
}

std::vector<std::size_t> layer_output_shape(const LayerSpec& layer, const std::vector<std::size_t>& in) {
    switch (layer.kind) {
        case LayerKind::conv2d: {
            if (in.size() != 3) {
                throw InvalidModel("conv2d layer '" + layer.name + "' expects [channels, height, width] input, got " +
                                   shape_to_string(in));
            }
            const auto& k = layer.weights.shape();
            if (k.size() != 4) {
                throw InvalidModel("conv2d layer '" + layer.name + "' needs kernel [out_ch, in_ch, kh, kw], got " +
                                   shape_to_string(k));
            }
            if (k[1] != in[0]) {
                throw InvalidModel("conv2d layer '" + layer.name + "' kernel expects " + std::to_string(k[1]) +
                                   " input channels, got " + std::to_string(in[0]));
            }
            if (k[2] % 2 == 0 || k[3] % 2 == 0) {
                throw InvalidModel("conv2d layer '" + layer.name + "' requires odd kernel extents for same-padding");
            }
            if (layer.bias.shape() != std::vector<std::size_t>{k[0]}) {
                throw InvalidModel("conv2d layer '" + layer.name + "' bias must have shape [" + std::to_string(k[0]) +
                                   "], got " + shape_to_string(layer.bias.shape()));
            }
            return {k[0], in[1], in[2]};
        }
        case LayerKind::relu:
            return in;
        case LayerKind::maxpool2x2: {
            if (in.size() != 3) {
                throw InvalidModel("maxpool layer '" + layer.name + "' expects [channels, height, width] input");
            }
            if (in[1] < 2 || in[2] < 2) {
                throw InvalidModel("maxpool layer '" + layer.name + "' needs spatial extents >= 2, got " +
                                   shape_to_string(in));
            }
            return {in[0], in[1] / 2, in[2] / 2};
        }
        case LayerKind::flatten:
            return {shape_product(in)};
        case LayerKind::linear: {
            if (in.size() != 1) {
                throw InvalidModel("linear layer '" + layer.name + "' expects a flat vector input, got " +
                                   shape_to_string(in));
            }
            const auto& w = layer.weights.shape();
            if (w.size() != 2 || w[1] != in[0]) {
                throw InvalidModel("linear layer '" + layer.name + "' weight " + shape_to_string(w) +
                                   " does not accept input " + shape_to_string(in));
            }
            if (layer.bias.shape() != std::vector<std::size_t>{w[0]}) {
                throw InvalidModel("linear layer '" + layer.name + "' bias must have shape [" + std::to_string(w[0]) +
                                   "]");
            }
            return {w[0]};
        }
    }
    throw InvalidModel("unknown layer kind");
}

void validate_model(const NetworkModel& model) {
    if (model.layers.empty()) throw InvalidModel("model has no layers");
    if (model.class_count == 0) throw InvalidModel("model class count must be positive");
    std::set<std::string> names;
    for (const auto& l : model.layers) {
        if (l.name.empty()) throw InvalidModel("layer names must be non-empty");
        if (!names.insert(l.name).second) throw InvalidModel("duplicate layer name '" + l.name + "'");
    }
    std::vector<std::size_t> shape = model.input_shape;
    for (const auto& l : model.layers) shape = layer_output_shape(l, shape);
    if (shape != std::vector<std::size_t>{model.class_count}) {
        throw InvalidModel("layer chain produces " + shape_to_string(shape) + ", expected logits of length " +
                           std::to_string(model.class_count));
    }
}

namespace {

Tensor conv_forward(const LayerSpec& l, const Tensor& in) {
    const auto& ks = l.weights.shape();
    const std::size_t oc_n = ks[0], ic_n = ks[1], kh = ks[2], kw = ks[3];
    const std::size_t h = in.extent(1), w = in.extent(2);
    const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>((kh - 1) / 2);
    const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>((kw - 1) / 2);
    Tensor out({oc_n, h, w});
    const double* x = in.data();
    const double* k = l.weights.data();
    double* y = out.data();
    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        const double b = l.bias[oc];
        for (std::size_t oy = 0; oy < h; ++oy) {
            for (std::size_t ox = 0; ox < w; ++ox) {
                double acc = b;
                for (std::size_t ic = 0; ic < ic_n; ++ic) {
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + dy) - ph;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* xrow = x + (ic * h + static_cast<std::size_t>(iy)) * w;
                        const double* krow = k + ((oc * ic_n + ic) * kh + dy) * kw;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + dx) - pw;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += xrow[static_cast<std::size_t>(ix)] * krow[dx];
                        }
                    }
                }
                y[(oc * h + oy) * w + ox] = acc;
            }
        }
    }
    return out;
}

// Accumulates grad_input and (when requested) dW/db in one pass over grad_output.
Tensor conv_backward(const LayerSpec& l, const Tensor& in, const Tensor& gout, Tensor* dw, Tensor* db) {
    const auto& ks = l.weights.shape();
    const std::size_t oc_n = ks[0], ic_n = ks[1], kh = ks[2], kw = ks[3];
    const std::size_t h = in.extent(1), w = in.extent(2);
    const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>((kh - 1) / 2);
    const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>((kw - 1) / 2);
    Tensor gin({ic_n, h, w});
    const double* x = in.data();
    const double* k = l.weights.data();
    const double* g = gout.data();
    double* gi = gin.data();
    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        for (std::size_t oy = 0; oy < h; ++oy) {
            for (std::size_t ox = 0; ox < w; ++ox) {
                const double gv = g[(oc * h + oy) * w + ox];
                if (db) (*db)[oc] += gv;
                for (std::size_t ic = 0; ic < ic_n; ++ic) {
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + dy) - ph;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + dx) - pw;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            const std::size_t xoff = (ic * h + static_cast<std::size_t>(iy)) * w +
                                                     static_cast<std::size_t>(ix);
                            const std::size_t koff = ((oc * ic_n + ic) * kh + dy) * kw + dx;
                            gi[xoff] += gv * k[koff];
                            if (dw) (*dw)[koff] += gv * x[xoff];
                        }
                    }
                }
            }
        }
    }
    return gin;
}

Tensor relu_forward(const Tensor& in) {
    Tensor out = in;
    for (double& v : out.flat()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& in, const Tensor& gout, bool guided) {
    Tensor gin = gout;
    for (std::size_t i = 0; i < gin.size(); ++i) {
        const bool pass = in[i] > 0.0 && (!guided || gout[i] > 0.0);
        if (!pass) gin[i] = 0.0;
    }
    return gin;
}

Tensor maxpool_forward(const Tensor& in) {
    const std::size_t c_n = in.extent(0), h = in.extent(1), w = in.extent(2);
    const std::size_t oh = h / 2, ow = w / 2;
    Tensor out({c_n, oh, ow});
    for (std::size_t c = 0; c < c_n; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double best = in(c, 2 * oy, 2 * ox);
                // strict > keeps the first row-major occurrence on ties
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const double v = in(c, 2 * oy + dy, 2 * ox + dx);
                        if (v > best) best = v;
                    }
                }
                out(c, oy, ox) = best;
            }
        }
    }
    return out;
}

Tensor maxpool_backward(const Tensor& in, const Tensor& gout) {
    const std::size_t c_n = in.extent(0), h = in.extent(1), w = in.extent(2);
    const std::size_t oh = h / 2, ow = w / 2;
    Tensor gin({c_n, h, w});
    for (std::size_t c = 0; c < c_n; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t by = 2 * oy, bx = 2 * ox;
                double best = in(c, by, bx);
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const double v = in(c, 2 * oy + dy, 2 * ox + dx);
                        if (v > best) {
                            best = v;
                            by = 2 * oy + dy;
                            bx = 2 * ox + dx;
                        }
                    }
                }
                gin(c, by, bx) += gout(c, oy, ox);
            }
        }
    }
    return gin;
}

Tensor linear_forward(const LayerSpec& l, const Tensor& in) {
    const std::size_t out_n = l.weights.extent(0), in_n = l.weights.extent(1);
    Tensor out({out_n});
    const double* wp = l.weights.data();
    for (std::size_t o = 0; o < out_n; ++o) {
        double acc = l.bias[o];
        const double* row = wp + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
    return out;
}

Tensor linear_backward(const LayerSpec& l, const Tensor& in, const Tensor& gout, Tensor* dw, Tensor* db) {
    const std::size_t out_n = l.weights.extent(0), in_n = l.weights.extent(1);
    Tensor gin({in_n});
    const double* wp = l.weights.data();
    for (std::size_t o = 0; o < out_n; ++o) {
        const double gv = gout[o];
        if (db) (*db)[o] += gv;
        const double* row = wp + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            gin[i] += gv * row[i];
            if (dw) (*dw)[o * in_n + i] += gv * in[i];
        }
    }
    return gin;
}

Tensor layer_forward(const LayerSpec& l, const Tensor& in) {
    // layer_output_shape validates dimensions before any arithmetic
    layer_output_shape(l, in.shape());
    switch (l.kind) {
        case LayerKind::conv2d: return conv_forward(l, in);
        case LayerKind::relu: return relu_forward(in);
        case LayerKind::maxpool2x2: return maxpool_forward(in);
        case LayerKind::flatten: return in.reshaped({in.size()});
        case LayerKind::linear: return linear_forward(l, in);
    }
    throw InvalidModel("unknown layer kind");
}

Tensor layer_backward(const LayerSpec& l, const Tensor& in, const Tensor& gout, bool guided, Tensor* dw, Tensor* db) {
    switch (l.kind) {
        case LayerKind::conv2d: return conv_backward(l, in, gout, dw, db);
        case LayerKind::relu: return relu_backward(in, gout, guided);
        case LayerKind::maxpool2x2: return maxpool_backward(in, gout);
        case LayerKind::flatten: return gout.reshaped(in.shape());
        case LayerKind::linear: return linear_backward(l, in, gout, dw, db);
    }
    throw InvalidModel("unknown layer kind");
}

void check_trace(const NetworkModel& model, const ActivationTrace& trace) {
    if (trace.outputs.size() != model.layers.size() || trace.names.size() != model.layers.size()) {
        throw TraceMismatch("trace has " + std::to_string(trace.outputs.size()) + " outputs for a model of " +
                            std::to_string(model.layers.size()) + " layers");
    }
    if (trace.input.shape() != model.input_shape) {
        throw TraceMismatch("trace input shape " + shape_to_string(trace.input.shape()) +
                            " does not match model input " + shape_to_string(model.input_shape));
    }
    std::vector<std::size_t> shape = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (trace.names[i] != model.layers[i].name) {
            throw TraceMismatch("trace layer '" + trace.names[i] + "' does not match model layer '" +
                                model.layers[i].name + "'");
        }
        shape = layer_output_shape(model.layers[i], shape);
        if (trace.outputs[i].shape() != shape) {
            throw TraceMismatch("trace output of '" + trace.names[i] + "' has shape " +
                                shape_to_string(trace.outputs[i].shape()) + ", expected " + shape_to_string(shape));
        }
    }
}

const Tensor& layer_input(const ActivationTrace& trace, std::size_t layer) {
    return layer == 0 ? trace.input : trace.outputs[layer - 1];
}

// Reverse fold from the logits down to (and excluding) layer `stop`; the
// returned tensor is the gradient w.r.t. outputs[stop], or w.r.t. the model
// input when stop_at_input is set.
Tensor backward_fold(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits,
                     std::size_t stop, bool stop_at_input, bool guided, ParamGrads* params) {
    check_trace(model, trace);
    if (grad_logits.shape() != trace.logits().shape()) {
        throw ShapeMismatch("grad_logits shape " + shape_to_string(grad_logits.shape()) + " does not match logits " +
                            shape_to_string(trace.logits().shape()));
    }
    Tensor g = grad_logits;
    const std::size_t first = stop_at_input ? 0 : stop + 1;
    for (std::size_t j = model.layers.size(); j-- > first;) {
        Tensor* dw = nullptr;
        Tensor* db = nullptr;
        if (params && model.layers[j].has_params()) {
            dw = &params->weights[j];
            db = &params->bias[j];
        }
        g = layer_backward(model.layers[j], layer_input(trace, j), g, guided, dw, db);
    }
    assert_finite(g, "backward");
    return g;
}

}  // namespace

ActivationTrace forward(const NetworkModel& model, const Tensor& input) {
    validate_model(model);
    if (input.shape() != model.input_shape) {
        throw ShapeMismatch("input shape " + shape_to_string(input.shape()) + " does not match model input " +
                            shape_to_string(model.input_shape));
    }
    ActivationTrace trace;
    trace.input = input;
    trace.names.reserve(model.layers.size());
    trace.outputs.reserve(model.layers.size());
    const Tensor* cur = &trace.input;
    for (const auto& layer : model.layers) {
        Tensor out = layer_forward(layer, *cur);
        assert_finite(out, layer.name.c_str());
        trace.names.push_back(layer.name);
        trace.outputs.push_back(std::move(out));
        cur = &trace.outputs.back();
    }
    return trace;
}

Tensor softmax(const Tensor& logits) {
    const double m = logits.max();
    Tensor p = logits;
    double sum = 0.0;
    for (double& v : p.flat()) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : p.flat()) v /= sum;
    return p;
}

CrossEntropyResult cross_entropy(const Tensor& logits, std::size_t class_index) {
    if (logits.rank() != 1) throw ShapeMismatch("logits must be a vector, got " + shape_to_string(logits.shape()));
    if (class_index >= logits.size()) {
        throw IndexOutOfRange("class index " + std::to_string(class_index) + " out of range for " +
                              std::to_string(logits.size()) + " logits");
    }
    const double m = logits.max();
    double sum = 0.0;
    for (double v : logits.flat()) sum += std::exp(v - m);
    const double log_sum = std::log(sum);
    CrossEntropyResult r;
    r.loss = -(logits[class_index] - m - log_sum);
    r.grad_logits = logits;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        r.grad_logits[i] = std::exp(logits[i] - m) / sum - (i == class_index ? 1.0 : 0.0);
    }
    assert_finite(r.grad_logits, "cross_entropy");
    return r;
}

std::size_t resolve_tap(const NetworkModel& model, std::string_view tap_layer, TapMode mode) {
    std::size_t i = model.layer_index(tap_layer);
    if (mode == TapMode::post_relu && model.layers[i].kind == LayerKind::conv2d && i + 1 < model.layers.size() &&
        model.layers[i + 1].kind == LayerKind::relu) {
        ++i;
    }
    return i;
}

Tensor backward_to_layer(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits,
                         std::string_view tap_layer, TapMode mode) {
    const std::size_t tap = resolve_tap(model, tap_layer, mode);
    return backward_fold(model, trace, grad_logits, tap, false, false, nullptr);
}

Tensor backward_to_input(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits) {
    return backward_fold(model, trace, grad_logits, 0, true, false, nullptr);
}

Tensor guided_backward_to_input(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits) {
    return backward_fold(model, trace, grad_logits, 0, true, true, nullptr);
}

ParamGrads backward_params(const NetworkModel& model, const ActivationTrace& trace, const Tensor& grad_logits) {
    ParamGrads grads;
    grads.weights.resize(model.layers.size());
    grads.bias.resize(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (model.layers[i].has_params()) {
            grads.weights[i] = Tensor::zeros(model.layers[i].weights.shape());
            grads.bias[i] = Tensor::zeros(model.layers[i].bias.shape());
        }
    }
    backward_fold(model, trace, grad_logits, 0, true, false, &grads);
    return grads;
}

}  // namespace isal
