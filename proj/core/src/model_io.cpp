#include "isal/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "isal/engine.hpp"
#include "isal/errors.hpp"
#include "isal/rng.hpp"

namespace isal {

namespace {

constexpr std::uint8_t kMagic[4] = {0x49, 0x53, 0x57, 0x31};  // "ISW1"
constexpr std::uint16_t kVersion = 1;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.flat()) put_f64(out, v);
}

struct Cursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > bytes.size()) {
            throw FormatError(std::string("truncated file while reading ") + what, pos);
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes[pos++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) | static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
};

Tensor read_tensor(Cursor& c) {
    const std::uint32_t rank = c.u32("tensor rank");
    if (rank > 4) throw FormatError("tensor rank " + std::to_string(rank) + " exceeds maximum of 4", c.pos - 4);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t e = c.u32("tensor extent");
        if (e == 0) throw FormatError("tensor extent must be positive", c.pos - 4);
        shape[i] = e;
        count *= e;
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = c.f64("tensor data");
    return Tensor(std::move(shape), std::move(data));
}

// The container does not carry the input shape; recover it from the layer
// chain. Models with a conv block assume square [C, S, S] inputs; pure
// flatten/linear chains get the first linear's input width as a flat vector.
std::vector<std::size_t> infer_input_shape(const std::vector<LayerSpec>& layers) {
    std::size_t first_conv = layers.size();
    std::size_t first_linear = layers.size();
    std::size_t pools_before_flatten = 0;
    std::size_t flatten_at = layers.size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        switch (layers[i].kind) {
            case LayerKind::conv2d:
                if (first_conv == layers.size()) first_conv = i;
                break;
            case LayerKind::linear:
                if (first_linear == layers.size()) first_linear = i;
                break;
            case LayerKind::maxpool2x2:
                if (flatten_at == layers.size()) ++pools_before_flatten;
                break;
            case LayerKind::flatten:
                if (flatten_at == layers.size()) flatten_at = i;
                break;
            case LayerKind::relu:
                break;
        }
    }
    if (first_conv == layers.size()) {
        if (first_linear == layers.size()) {
            throw InvalidModel("cannot infer input shape: model has neither conv nor linear layers");
        }
        return {layers[first_linear].weights.extent(1)};
    }
    if (first_linear == layers.size() || flatten_at == layers.size()) {
        throw InvalidModel("cannot infer input shape: conv model lacks flatten + linear head");
    }
    // channels entering flatten = out_ch of the last conv before it
    std::size_t channels_at_flatten = layers[first_conv].weights.extent(1);
    for (std::size_t i = 0; i < flatten_at; ++i) {
        if (layers[i].kind == LayerKind::conv2d) channels_at_flatten = layers[i].weights.extent(0);
    }
    const std::size_t flat_dim = layers[first_linear].weights.extent(1);
    if (flat_dim % channels_at_flatten != 0) {
        throw InvalidModel("cannot infer input shape: linear input dimension is not a channel multiple");
    }
    const std::size_t spatial = flat_dim / channels_at_flatten;
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spatial))));
    if (side * side != spatial) {
        throw InvalidModel("cannot infer input shape: non-square feature map at flatten");
    }
    const std::size_t scale = std::size_t{1} << pools_before_flatten;
    return {layers[first_conv].weights.extent(1), side * scale, side * scale};
}

}  // namespace

NetworkModel build_toy_cnn(std::size_t class_count, std::uint64_t seed) {
    if (class_count < 1) throw InvalidConfig("class count must be at least 1");
    Rng rng(seed);
    auto glorot = [&rng](Tensor& t, std::size_t fan_in, std::size_t fan_out) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : t.flat()) v = rng.uniform(-a, a);
    };

    NetworkModel m;
    m.input_shape = {3, 64, 64};
    m.class_count = class_count;
    m.meta = {"toy-cnn", seed, 0};

    LayerSpec conv1{LayerKind::conv2d, "conv1", Tensor({8, 3, 3, 3}), Tensor({8})};
    glorot(conv1.weights, 3 * 9, 8 * 9);
    m.layers.push_back(std::move(conv1));
    m.layers.push_back({LayerKind::relu, "relu1", {}, {}});
    m.layers.push_back({LayerKind::maxpool2x2, "pool1", {}, {}});

    LayerSpec conv2{LayerKind::conv2d, "conv2", Tensor({16, 8, 3, 3}), Tensor({16})};
    glorot(conv2.weights, 8 * 9, 16 * 9);
    m.layers.push_back(std::move(conv2));
    m.layers.push_back({LayerKind::relu, "relu2", {}, {}});
    m.layers.push_back({LayerKind::maxpool2x2, "pool2", {}, {}});
    m.layers.push_back({LayerKind::flatten, "flatten", {}, {}});

    LayerSpec fc{LayerKind::linear, "fc", Tensor({class_count, 16 * 16 * 16}), Tensor({class_count})};
    glorot(fc.weights, 16 * 16 * 16, class_count);
    m.layers.push_back(std::move(fc));

    validate_model(m);
    return m;
}

std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
    validate_model(model);
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& layer : model.layers) {
        put_u8(out, static_cast<std::uint8_t>(layer.kind));
        if (layer.name.size() > 255) throw InvalidModel("layer name '" + layer.name + "' exceeds 255 bytes");
        put_u8(out, static_cast<std::uint8_t>(layer.name.size()));
        out.insert(out.end(), layer.name.begin(), layer.name.end());
        if (layer.has_params()) {
            put_tensor(out, layer.weights);
            put_tensor(out, layer.bias);
        }
    }
    put_u32(out, static_cast<std::uint32_t>(model.class_count));
    return out;
}

NetworkModel parse_model(const std::vector<std::uint8_t>& bytes) {
    Cursor c{bytes};
    c.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("bad magic bytes, expected 49 53 57 31 ('ISW1')", 0);
    }
    c.pos = 4;
    const std::uint16_t version = c.u16("version");
    if (version != kVersion) {
        throw FormatError("unsupported version " + std::to_string(version) + ", expected 1", c.pos - 2);
    }
    const std::uint32_t layer_count = c.u32("layer count");
    NetworkModel m;
    m.layers.reserve(layer_count);
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        const std::uint8_t tag = c.u8("layer kind");
        if (tag > 4) throw FormatError("unknown layer kind tag " + std::to_string(tag), c.pos - 1);
        LayerSpec layer;
        layer.kind = static_cast<LayerKind>(tag);
        const std::uint8_t name_len = c.u8("name length");
        c.need(name_len, "layer name");
        layer.name.assign(reinterpret_cast<const char*>(bytes.data() + c.pos), name_len);
        c.pos += name_len;
        if (layer.has_params()) {
            layer.weights = read_tensor(c);
            layer.bias = read_tensor(c);
        }
        m.layers.push_back(std::move(layer));
    }
    m.class_count = c.u32("class count");
    if (c.pos != bytes.size()) {
        throw FormatError("trailing data after model", c.pos);
    }
    m.input_shape = infer_input_shape(m.layers);
    validate_model(m);
    m.meta.name = "loaded";
    return m;
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

NetworkModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_model(bytes);
}

Prediction predict(const NetworkModel& model, const Tensor& image) {
    const ActivationTrace trace = forward(model, image);
    Prediction p;
    p.probabilities = softmax(trace.logits());
    p.class_index = 0;
    for (std::size_t i = 1; i < p.probabilities.size(); ++i) {
        if (p.probabilities[i] > p.probabilities[p.class_index]) p.class_index = i;
    }
    return p;
}

std::string model_hash(const NetworkModel& model) {
    const auto bytes = serialize_model(model);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return s;
}

}  // namespace isal
