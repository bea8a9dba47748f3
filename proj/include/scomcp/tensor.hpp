// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace scomcp::nn {

// Dense row-major 2-D double matrix. Feature maps are stored flattened as
// [H*W, C]; token sequences as [K, D]; scalars as [1, 1].
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), buf_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Tensor: negative dims");
    }

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        std::fill(t.buf_.begin(), t.buf_.end(), v);
        return t;
    }
    static Tensor randn(int r, int c, std::mt19937_64& rng, double stddev) {
        Tensor t(r, c);
        std::normal_distribution<double> dist(0.0, stddev);
        for (auto& v : t.buf_) v = dist(rng);
        return t;
    }
    static Tensor from(int r, int c, std::vector<double> data) {
        if (static_cast<size_t>(r) * c != data.size()) throw std::invalid_argument("Tensor::from: size mismatch");
        Tensor t;
        t.rows_ = r;
        t.cols_ = c;
        t.buf_ = std::move(data);
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int64_t size() const { return static_cast<int64_t>(rows_) * cols_; }
    bool empty() const { return size() == 0; }

    double* data() { return buf_.data(); }
    const double* data() const { return buf_.data(); }

    double& at(int r, int c) { return buf_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return buf_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](int64_t i) { return buf_[i]; }
    double operator[](int64_t i) const { return buf_[i]; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    // reinterpret the buffer with a new shape of equal size
    Tensor reshaped(int r, int c) const {
        if (static_cast<int64_t>(r) * c != size()) throw std::invalid_argument("Tensor::reshaped: size mismatch");
        Tensor t = *this;
        t.rows_ = r;
        t.cols_ = c;
        return t;
    }

    void fill(double v) { std::fill(buf_.begin(), buf_.end(), v); }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> buf_;
};

// C = alpha * op(A) * op(B) + beta * C, where op is optional transpose.
void gemm(const Tensor& A, bool transA, const Tensor& B, bool transB, Tensor& C,
          double alpha = 1.0, double beta = 0.0);

Tensor matmul(const Tensor& A, const Tensor& B);

}  // namespace scomcp::nn
