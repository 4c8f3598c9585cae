#include "stdlab/tensor.hpp"

namespace stdlab {

void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
        throw std::invalid_argument("matmul: shape mismatch");
    }
    const size_t m = a.rows, k = a.cols, n = b.cols;
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a.v.data() + i * k;
        double* crow = c.v.data() + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b.v.data() + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_at_b_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols) {
        throw std::invalid_argument("matmul_at_b: shape mismatch");
    }
    const size_t k = a.rows, m = a.cols, n = b.cols;
    for (size_t p = 0; p < k; ++p) {
        const double* arow = a.v.data() + p * m;
        const double* brow = b.v.data() + p * n;
        for (size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c.v.data() + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_a_bt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    if (a.cols != b.cols || c.rows != a.rows || c.cols != b.rows) {
        throw std::invalid_argument("matmul_a_bt: shape mismatch");
    }
    const size_t m = a.rows, k = a.cols, n = b.rows;
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a.v.data() + i * k;
        double* crow = c.v.data() + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double* brow = b.v.data() + j * k;
            double s = 0.0;
            for (size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

}  // namespace stdlab
