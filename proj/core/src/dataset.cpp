#include "isal/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "isal/errors.hpp"
#include "isal/imaging.hpp"
#include "isal/pnm.hpp"
#include "isal/rng.hpp"
#include "isal/version.hpp"

namespace isal {

namespace {

constexpr std::size_t kSide = 64;
constexpr double kDensitySigma = 4.0;

enum class Shape { disk = 0, square = 1, triangle = 2, cross = 3 };

bool inside_shape(Shape s, double dx, double dy, double r) {
    switch (s) {
        case Shape::disk:
            return dx * dx + dy * dy <= r * r;
        case Shape::square:
            return std::abs(dx) <= 0.85 * r && std::abs(dy) <= 0.85 * r;
        case Shape::triangle: {
            // apex at dy = -r, base at dy = +0.8r
            if (dy < -r || dy > 0.8 * r) return false;
            const double half_width = 1.05 * r * (dy + r) / (1.8 * r);
            return std::abs(dx) <= half_width;
        }
        case Shape::cross:
            return (std::abs(dx) <= 0.33 * r && std::abs(dy) <= r) ||
                   (std::abs(dy) <= 0.33 * r && std::abs(dx) <= r);
    }
    return false;
}

Tensor shape_mask(Shape s, double cx, double cy, double r) {
    Tensor mask({kSide, kSide});
    for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
            if (inside_shape(s, static_cast<double>(x) - cx, static_cast<double>(y) - cy, r)) {
                mask(y, x) = 1.0;
            }
        }
    }
    return mask;
}

std::string file_stem(std::size_t index) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04zu", index);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

}  // namespace

DatasetManifest generate_synthetic_dataset(const std::filesystem::path& out_dir, std::size_t image_count,
                                           std::size_t class_count, std::uint64_t seed) {
    if (class_count < 1 || class_count > 4) {
        throw InvalidConfig("class count must be in [1, 4], the shape vocabulary has 4 entries");
    }
    if (image_count < 1) throw InvalidConfig("image count must be positive");

    std::error_code ec;
    for (const char* sub : {"images", "fixations", "density"}) {
        std::filesystem::create_directories(out_dir / sub, ec);
        if (ec) throw IoError("cannot create '" + (out_dir / sub).string() + "': " + ec.message());
    }

    DatasetManifest manifest;
    manifest.root = out_dir;
    manifest.seed = seed;
    manifest.class_count = class_count;

    Rng rng(seed);
    std::string labels_csv = "file,class\n";
    for (std::size_t i = 0; i < image_count; ++i) {
        const auto label = static_cast<int>(i % class_count);

        // low-frequency background: coarse noise grid upsampled to full size
        Tensor coarse({3, 8, 8});
        for (double& v : coarse.flat()) v = rng.uniform(0.15, 0.55);
        Tensor image = resize_bilinear_chw(coarse, kSide, kSide);

        const double r = rng.uniform(8.0, 14.0);
        const double cx = rng.uniform(r + 2.0, static_cast<double>(kSide) - r - 3.0);
        const double cy = rng.uniform(r + 2.0, static_cast<double>(kSide) - r - 3.0);
        double color[3];
        for (double& c : color) c = rng.uniform(0.7, 1.0);

        const Tensor mask = shape_mask(static_cast<Shape>(label), cx, cy, r);
        for (std::size_t y = 0; y < kSide; ++y) {
            for (std::size_t x = 0; x < kSide; ++x) {
                if (mask(y, x) != 0.0) {
                    for (std::size_t c = 0; c < 3; ++c) image(c, y, x) = color[c];
                }
            }
        }

        Tensor density = gaussian_blur(mask, BlurSpec{kDensitySigma});
        const double peak = density.max();
        for (double& v : density.flat()) v /= peak;

        const std::string stem = file_stem(i);
        DatasetRecord rec{stem + ".ppm", label, stem + ".pgm", stem + ".pgm"};
        save_ppm(image, out_dir / "images" / rec.image_file);
        save_pgm(mask, out_dir / "fixations" / rec.fixation_file);
        save_pgm(density, out_dir / "density" / rec.density_file);
        labels_csv += rec.image_file + "," + std::to_string(label) + "\n";
        manifest.records.push_back(std::move(rec));
    }

    {
        std::ofstream out(out_dir / "labels.csv", std::ios::binary);
        if (!out) throw IoError("cannot write '" + (out_dir / "labels.csv").string() + "'");
        out << labels_csv;
    }
    {
        nlohmann::json meta;
        meta["name"] = "synthetic-shapes";
        meta["seed"] = seed;
        meta["class_count"] = class_count;
        meta["image_count"] = image_count;
        meta["tool"] = kToolVersion;
        std::ofstream out(out_dir / "dataset.json", std::ios::binary);
        if (!out) throw IoError("cannot write '" + (out_dir / "dataset.json").string() + "'");
        out << meta.dump(2) << "\n";
    }
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& root, std::string split) {
    DatasetManifest manifest;
    manifest.root = root;
    manifest.split = std::move(split);

    std::ifstream in(root / "labels.csv");
    if (!in) throw DataError("cannot open '" + (root / "labels.csv").string() + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "file,class") {
        throw DataError("labels.csv must start with header 'file,class'");
    }
    int max_label = -1;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw DataError("malformed labels.csv row: '" + line + "'");
        DatasetRecord rec;
        rec.image_file = trim(line.substr(0, comma));
        try {
            rec.class_label = std::stoi(trim(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError("malformed class label in row: '" + line + "'");
        }
        if (rec.class_label < 0) throw DataError("negative class label in row: '" + line + "'");
        max_label = std::max(max_label, rec.class_label);
        const std::size_t dot = rec.image_file.rfind('.');
        const std::string stem = dot == std::string::npos ? rec.image_file : rec.image_file.substr(0, dot);
        rec.fixation_file = stem + ".pgm";
        rec.density_file = stem + ".pgm";
        manifest.records.push_back(std::move(rec));
    }
    if (manifest.records.empty()) throw DataError("labels.csv lists no records");

    manifest.class_count = static_cast<std::size_t>(max_label) + 1;
    const auto meta_path = root / "dataset.json";
    if (std::filesystem::exists(meta_path)) {
        std::ifstream meta_in(meta_path);
        nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
        if (!meta.is_discarded()) {
            if (meta.contains("seed")) manifest.seed = meta["seed"].get<std::uint64_t>();
            if (meta.contains("class_count")) manifest.class_count = meta["class_count"].get<std::size_t>();
        }
    }

    // all three files must exist and share spatial dimensions
    for (const auto& rec : manifest.records) {
        const Tensor image = load_dataset_image(manifest, rec);
        const Tensor fix = load_dataset_fixations(manifest, rec);
        const Tensor den = load_dataset_density(manifest, rec);
        if (image.extent(1) != fix.extent(0) || image.extent(2) != fix.extent(1) || fix.shape() != den.shape()) {
            throw DataError("record '" + rec.image_file + "' has mismatched spatial dimensions");
        }
        if (static_cast<std::size_t>(rec.class_label) >= manifest.class_count) {
            throw DataError("record '" + rec.image_file + "' has out-of-range class label");
        }
    }
    return manifest;
}

Tensor load_dataset_image(const DatasetManifest& manifest, const DatasetRecord& record) {
    const auto path = manifest.root / "images" / record.image_file;
    if (!std::filesystem::exists(path)) throw DataError("missing image file '" + path.string() + "'");
    return load_ppm(path);
}

Tensor load_dataset_fixations(const DatasetManifest& manifest, const DatasetRecord& record) {
    const auto path = manifest.root / "fixations" / record.fixation_file;
    if (!std::filesystem::exists(path)) throw DataError("missing fixation file '" + path.string() + "'");
    return load_pgm(path);
}

Tensor load_dataset_density(const DatasetManifest& manifest, const DatasetRecord& record) {
    const auto path = manifest.root / "density" / record.density_file;
    if (!std::filesystem::exists(path)) throw DataError("missing density file '" + path.string() + "'");
    return load_pgm(path);
}

}  // namespace isal
