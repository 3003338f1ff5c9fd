#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfx/config.hpp"
#include "cfx/image.hpp"

namespace cfx {

enum class Label { healthy, pathological };

inline const char* label_name(Label l) { return l == Label::healthy ? "healthy" : "pathological"; }

struct LabeledImage {
    Grid pixels;          // [0,1], quantized to the 16-bit storage grid
    Label label = Label::healthy;
    BinaryMask gt_mask;   // lesion pixels; all-zero for healthy samples
    uint64_t seed = 0;
};

enum class Split { train, val, test };
inline const char* split_name(Split s) {
    return s == Split::train ? "train" : (s == Split::val ? "val" : "test");
}

struct SampleRecord {
    std::string id;
    Split split = Split::train;
    Label label = Label::healthy;
    uint64_t seed = 0;
    std::string image_path;  // relative to the manifest directory
    std::string mask_path;
};

struct DatasetManifest {
    std::string config_hash;
    SynthConfig config;  // embedded so regeneration is self-contained
    std::vector<SampleRecord> samples;
    std::filesystem::path root;  // directory holding manifest + files

    std::vector<const SampleRecord*> select(Split s) const;
    std::vector<const SampleRecord*> select(Split s, Label l) const;
    void save(const std::filesystem::path& path) const;
    static DatasetManifest load(const std::filesystem::path& path);
};

// Pure function of (seed, label, config): textured background, i.i.d. noise,
// and for pathological samples compact bright blobs with half-peak ground
// truth masks.
LabeledImage generate_sample(uint64_t seed, Label label, const SynthConfig& config);

// Writes every sample (16-bit image PNG + 8-bit mask PNG) plus manifest.txt.
DatasetManifest generate_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

LabeledImage load_sample(const DatasetManifest& m, const SampleRecord& rec);

}  // namespace cfx
