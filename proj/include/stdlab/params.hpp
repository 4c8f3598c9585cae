#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stdlab/common.hpp"

namespace stdlab {

enum class DType : uint8_t { F32 = 0, F64 = 1, Bytes = 2 };

// Named flat array with shape metadata. Training runs in f64; the f32 and byte
// tags exist for the checkpoint container.
struct ParamEntry {
    std::string name;
    std::vector<uint64_t> shape;
    std::vector<double> data;
    DType dtype = DType::F64;

    uint64_t count() const {
        uint64_t n = 1;
        for (auto s : shape) n *= s;
        return n;
    }
};

// Ordered map name -> entry. Order is creation order and is stable across a run.
class ParamStore {
public:
    ParamEntry& add(const std::string& name, std::vector<uint64_t> shape, DType dtype = DType::F64);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    ParamEntry& at(const std::string& name);
    const ParamEntry& at(const std::string& name) const;

    size_t size() const { return entries_.size(); }
    ParamEntry& entry(size_t i) { return entries_[i]; }
    const ParamEntry& entry(size_t i) const { return entries_[i]; }

    uint64_t total_parameters() const;

    // same names/shapes, all-zero data
    ParamStore zeros_like() const;

    // elementwise ops used by the optimizer and tests
    void axpy(double a, const ParamStore& x);  // this += a * x
    double max_abs_diff(const ParamStore& o) const;
    uint64_t content_hash() const;  // FNV-1a over raw doubles, order-sensitive

private:
    std::vector<ParamEntry> entries_;
    std::map<std::string, size_t> index_;
};

}  // namespace stdlab
