#pragma once

#include <cstdint>
#include <random>

#include "stdlab/common.hpp"

namespace stdlab {

// splitmix64; used to derive independent substream seeds from one master seed.
inline uint64_t mix_seed(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream_id) {
    return mix_seed(master ^ mix_seed(stream_id));
}

// Deterministic generator. Normal draws use Box-Muller on explicit uniforms so
// sequences do not depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform() {
        // [0, 1), 53-bit resolution
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vec normal_vec(size_t n) {
        Vec v(n);
        for (auto& x : v) x = normal();
        return v;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace stdlab
