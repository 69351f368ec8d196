#include "isal/pnm.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "isal/errors.hpp"

namespace isal {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct HeaderParser {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    bool at_end() const { return pos >= bytes.size(); }

    void skip_space() {
        while (!at_end()) {
            const char ch = static_cast<char>(bytes[pos]);
            if (ch == '#') {
                while (!at_end() && bytes[pos] != '\n') ++pos;
            } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space();
        if (at_end() || bytes[pos] < '0' || bytes[pos] > '9') {
            throw FormatError(std::string("expected ") + what, pos);
        }
        std::size_t v = 0;
        while (!at_end() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1u << 30) throw FormatError(std::string(what) + " out of range", pos);
            ++pos;
        }
        return v;
    }
};

// Returns offset of the first raster byte.
std::size_t parse_header(const std::vector<std::uint8_t>& bytes, char expected_kind, std::size_t& w, std::size_t& h) {
    HeaderParser p{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || static_cast<char>(bytes[1]) != expected_kind) {
        throw FormatError(std::string("expected magic 'P") + expected_kind + "'", 0);
    }
    p.pos = 2;
    w = p.number("width");
    h = p.number("height");
    const std::size_t maxval = p.number("maxval");
    if (maxval != 255) {
        throw FormatError("unsupported maxval " + std::to_string(maxval) + ", only 255", p.pos);
    }
    // exactly one whitespace byte separates the header from the raster
    if (p.at_end()) throw FormatError("missing raster data", p.pos);
    const char ch = static_cast<char>(bytes[p.pos]);
    if (ch != ' ' && ch != '\t' && ch != '\r' && ch != '\n') {
        throw FormatError("expected whitespace before raster data", p.pos);
    }
    return p.pos + 1;
}

void check_raster(const std::vector<std::uint8_t>& bytes, std::size_t start, std::size_t expected) {
    if (bytes.size() < start + expected) {
        throw FormatError("truncated raster, expected " + std::to_string(expected) + " bytes", bytes.size());
    }
    if (bytes.size() > start + expected) {
        throw FormatError("trailing data after raster", start + expected);
    }
}

void write_file(const std::filesystem::path& path, const std::string& header, const std::vector<std::uint8_t>& raster) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::uint8_t quantize_byte(double v) {
    double q = std::floor(v + 0.5);
    if (q < 0.0) q = 0.0;
    if (q > 255.0) q = 255.0;
    return static_cast<std::uint8_t>(q);
}

Tensor load_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    std::size_t w = 0, h = 0;
    const std::size_t start = parse_header(bytes, '5', w, h);
    check_raster(bytes, start, w * h);
    Tensor grid({h, w});
    for (std::size_t i = 0; i < w * h; ++i) grid[i] = bytes[start + i] / 255.0;
    return grid;
}

Tensor load_ppm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    std::size_t w = 0, h = 0;
    const std::size_t start = parse_header(bytes, '6', w, h);
    check_raster(bytes, start, 3 * w * h);
    Tensor image({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t off = start + 3 * (y * w + x);
            for (std::size_t c = 0; c < 3; ++c) image(c, y, x) = bytes[off + c] / 255.0;
        }
    }
    return image;
}

void save_pgm(const Tensor& grid01, const std::filesystem::path& path) {
    if (grid01.rank() != 2) throw ShapeMismatch("save_pgm expects a [H, W] grid, got " + shape_to_string(grid01.shape()));
    const std::size_t h = grid01.extent(0), w = grid01.extent(1);
    std::vector<std::uint8_t> raster(h * w);
    for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = quantize_byte(grid01[i] * 255.0);
    write_file(path, "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", raster);
}

void save_pgm255(const Tensor& grid255, const std::filesystem::path& path) {
    if (grid255.rank() != 2) {
        throw ShapeMismatch("save_pgm255 expects a [H, W] grid, got " + shape_to_string(grid255.shape()));
    }
    const std::size_t h = grid255.extent(0), w = grid255.extent(1);
    std::vector<std::uint8_t> raster(h * w);
    for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = quantize_byte(grid255[i]);
    write_file(path, "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", raster);
}

void save_ppm(const Tensor& image01, const std::filesystem::path& path) {
    if (image01.rank() != 3 || image01.extent(0) != 3) {
        throw ShapeMismatch("save_ppm expects a [3, H, W] image, got " + shape_to_string(image01.shape()));
    }
    const std::size_t h = image01.extent(1), w = image01.extent(2);
    std::vector<std::uint8_t> raster(3 * h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                raster[3 * (y * w + x) + c] = quantize_byte(image01(c, y, x) * 255.0);
            }
        }
    }
    write_file(path, "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", raster);
}

}  // namespace isal
