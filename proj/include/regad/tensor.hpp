#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace regad {

/// Dense float32 tensor, row-major (innermost dimension last). Feature maps
/// use NCHW layout throughout.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0f) {}
    Tensor(std::vector<int> shape, std::vector<float> values)
        : shape_(std::move(shape)), data_(std::move(values)) {
        assert(static_cast<int64_t>(data_.size()) == checked_numel(shape_));
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW accessor.
    float& at(int n, int c, int h, int w) {
        return data_[static_cast<size_t>(((int64_t(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    float at(int n, int c, int h, int w) const {
        return data_[static_cast<size_t>(((int64_t(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    // 2-d accessor (rows, cols).
    float& at(int r, int c) { return data_[static_cast<size_t>(int64_t(r) * shape_[1] + c)]; }
    float at(int r, int c) const { return data_[static_cast<size_t>(int64_t(r) * shape_[1] + c)]; }

    void zero() { std::fill(data_.begin(), data_.end(), 0.0f); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    static int64_t checked_numel(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            assert(d >= 0);
            n *= d;
        }
        return n;
    }

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

}  // namespace regad
