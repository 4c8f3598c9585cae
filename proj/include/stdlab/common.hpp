#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stdlab {

// Data-space point. Dimension is fixed per run; everything runs in f64.
using Vec = std::vector<double>;

// Conditioning signal: either the null (unconditional) token or a class label.
struct Condition {
    int label = -1;

    static Condition null_cond() { return Condition{}; }
    static Condition class_label(int k) { return Condition{k}; }

    bool is_null() const { return label < 0; }
    bool operator==(const Condition& o) const { return label == o.label; }
};

inline void check_dim(const Vec& v, size_t d, const char* what) {
    if (v.size() != d) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                    std::to_string(v.size()) + ", want " + std::to_string(d) + ")");
    }
}

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline double sup_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline double l2_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace stdlab
