#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cfx/tensor.hpp"

namespace cfx {

// Portable single-file tensor archive: a text metadata block (architecture
// descriptor, thresholds, config hash, training history) followed by named
// float64 arrays. All models persist through this format.
struct TensorArchive {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void put(const std::string& name, const Tensor& t) { tensors.emplace_back(name, t); }
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    std::string meta_at(const std::string& key) const;
    double meta_double(const std::string& key) const;
    int meta_int(const std::string& key) const;

    void save(const std::filesystem::path& path) const;
    static TensorArchive load(const std::filesystem::path& path);
};

}  // namespace cfx
