#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "cfx/rng.hpp"

namespace cfx {

// Dense row-major double tensor. Shapes used in this project are small
// ({1}, {n}, {m,n}, {C,H,W}), so value semantics and plain vectors are fine.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, double fill);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor full(std::vector<int> shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor randn(std::vector<int> shape, Rng& rng, double stddev = 1.0);

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    // 2-D / 3-D indexed access (row-major).
    double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double& at(int c, int i, int j) {
        return data_[(static_cast<size_t>(c) * shape_[1] + i) * shape_[2] + j];
    }
    double at(int c, int i, int j) const {
        return data_[(static_cast<size_t>(c) * shape_[1] + i) * shape_[2] + j];
    }

    double item() const { return data_.at(0); }

    void fill(double v);
    double sum() const;
    double min() const;
    double max() const;
    double abs_max() const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    uint64_t byte_hash() const { return fnv1a(data_.data(), data_.size() * sizeof(double)); }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

size_t shape_numel(const std::vector<int>& shape);

}  // namespace cfx
