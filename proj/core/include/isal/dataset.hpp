#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "isal/tensor.hpp"

namespace isal {

struct DatasetRecord {
    std::string image_file;     // under <root>/images/
    int class_label = 0;
    std::string fixation_file;  // under <root>/fixations/
    std::string density_file;   // under <root>/density/
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<DatasetRecord> records;
    std::string split = "train";
    std::uint64_t seed = 0;
    std::size_t class_count = 0;
};

// Seeded procedural dataset: 64x64 RGB images with a low-frequency noise
// background and one high-contrast foreground shape whose identity is the
// class label (0 disk, 1 square, 2 triangle, 3 cross). Fixation map is the
// binary shape support; density map is that mask blurred with sigma=4px and
// peak-normalized. Layout:
//   <root>/images/NNNN.ppm, <root>/fixations/NNNN.pgm, <root>/density/NNNN.pgm,
//   <root>/labels.csv with header "file,class".
// Byte output is a pure function of (image_count, class_count, seed).
DatasetManifest generate_synthetic_dataset(const std::filesystem::path& out_dir, std::size_t image_count,
                                           std::size_t class_count, std::uint64_t seed);

DatasetManifest load_manifest(const std::filesystem::path& root, std::string split);

Tensor load_dataset_image(const DatasetManifest& manifest, const DatasetRecord& record);    // [3, H, W]
Tensor load_dataset_fixations(const DatasetManifest& manifest, const DatasetRecord& record);  // [H, W]
Tensor load_dataset_density(const DatasetManifest& manifest, const DatasetRecord& record);    // [H, W]

}  // namespace isal
