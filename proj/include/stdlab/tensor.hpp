#pragma once

#include <cstddef>
#include <vector>

#include "stdlab/common.hpp"

namespace stdlab {

// Dense row-major matrix. Everything the trainer touches is 2-D: activations
// are (batch x features), weights (in x out), biases (1 x out), scalars (1 x 1).
struct Tensor {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& at(size_t r, size_t c) { return v[r * cols + c]; }
    double at(size_t r, size_t c) const { return v[r * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// C += A * B
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c);

// C += A^T * B   (A is k x m, B is k x n, C is m x n)
void matmul_at_b_acc(const Tensor& a, const Tensor& b, Tensor& c);

// C += A * B^T   (A is m x k, B is n x k, C is m x n)
void matmul_a_bt_acc(const Tensor& a, const Tensor& b, Tensor& c);

}  // namespace stdlab
