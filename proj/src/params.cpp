#include "stdlab/params.hpp"

#include <cstring>

namespace stdlab {

ParamEntry& ParamStore::add(const std::string& name, std::vector<uint64_t> shape, DType dtype) {
    if (has(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    ParamEntry e;
    e.name = name;
    e.shape = std::move(shape);
    e.dtype = dtype;
    uint64_t n = 1;
    for (auto s : e.shape) n *= s;
    e.data.assign(n, 0.0);
    entries_.push_back(std::move(e));
    index_[name] = entries_.size() - 1;
    return entries_.back();
}

ParamEntry& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: missing entry " + name);
    return entries_[it->second];
}

const ParamEntry& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: missing entry " + name);
    return entries_[it->second];
}

uint64_t ParamStore::total_parameters() const {
    uint64_t n = 0;
    for (const auto& e : entries_) n += e.count();
    return n;
}

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    for (const auto& e : entries_) out.add(e.name, e.shape, e.dtype);
    return out;
}

void ParamStore::axpy(double a, const ParamStore& x) {
    if (x.size() != size()) throw std::invalid_argument("ParamStore::axpy: store mismatch");
    for (size_t i = 0; i < entries_.size(); ++i) {
        auto& dst = entries_[i].data;
        const auto& src = x.entries_[i].data;
        if (src.size() != dst.size()) throw std::invalid_argument("ParamStore::axpy: entry mismatch");
        for (size_t j = 0; j < dst.size(); ++j) dst[j] += a * src[j];
    }
}

double ParamStore::max_abs_diff(const ParamStore& o) const {
    if (o.size() != size()) throw std::invalid_argument("ParamStore::max_abs_diff: store mismatch");
    double m = 0.0;
    for (size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i].data;
        const auto& b = o.entries_[i].data;
        for (size_t j = 0; j < a.size(); ++j) m = std::max(m, std::fabs(a[j] - b[j]));
    }
    return m;
}

uint64_t ParamStore::content_hash() const {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& e : entries_) {
        mix(e.name.data(), e.name.size());
        mix(e.data.data(), e.data.size() * sizeof(double));
    }
    return h;
}

}  // namespace stdlab
