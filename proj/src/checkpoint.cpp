#include "stdlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace stdlab {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'D', 'L'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& o, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    o.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& o, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    o.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f64_array(std::ostream& o, const double* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &p[i], 8);
        put_u64(o, bits);
    }
}

void put_f32_array(std::ostream& o, const double* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        float f = static_cast<float>(p[i]);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(o, bits);
    }
}

void write_entry_header(std::ostream& o, const std::string& name, uint8_t dtype,
                        const std::vector<uint64_t>& dims) {
    put_u64(o, name.size());
    o.write(name.data(), static_cast<std::streamsize>(name.size()));
    o.put(static_cast<char>(dtype));
    put_u64(o, dims.size());
    for (auto d : dims) put_u64(o, d);
}

}  // namespace

const ParamStore& LoadedCheckpoint::store(const std::string& name) const {
    for (const auto& [n, s] : stores) {
        if (n == name) return s;
    }
    throw std::runtime_error("checkpoint: missing store " + name);
}

bool LoadedCheckpoint::has_store(const std::string& name) const {
    for (const auto& [n, s] : stores) {
        if (n == name) return true;
    }
    return false;
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParamStore*>>& stores,
                     const std::map<std::string, double>& scalars,
                     const std::map<std::string, std::string>& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);

    uint64_t entries = 0;
    for (const auto& [name, store] : stores) entries += store->size();
    entries += scalars.size() + text.size();

    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, entries);

    for (const auto& [sname, store] : stores) {
        for (size_t i = 0; i < store->size(); ++i) {
            const ParamEntry& e = store->entry(i);
            write_entry_header(out, sname + "/" + e.name, static_cast<uint8_t>(e.dtype), e.shape);
            if (e.dtype == DType::F64) {
                put_f64_array(out, e.data.data(), e.data.size());
            } else if (e.dtype == DType::F32) {
                put_f32_array(out, e.data.data(), e.data.size());
            } else {
                throw std::runtime_error("save_checkpoint: byte entries are reserved for text metadata");
            }
        }
    }
    for (const auto& [key, value] : scalars) {
        write_entry_header(out, "scalar/" + key, static_cast<uint8_t>(DType::F64), {1});
        put_f64_array(out, &value, 1);
    }
    for (const auto& [key, value] : text) {
        write_entry_header(out, "text/" + key, static_cast<uint8_t>(DType::Bytes), {value.size()});
        out.write(value.data(), static_cast<std::streamsize>(value.size()));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    }
    uint32_t version = get_u32(in);
    if (version != kVersion) {
        throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
    }
    uint64_t entries = get_u64(in);

    LoadedCheckpoint ck;
    for (uint64_t e = 0; e < entries; ++e) {
        uint64_t name_len = get_u64(in);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        uint8_t dtype = static_cast<uint8_t>(in.get());
        uint64_t rank = get_u64(in);
        std::vector<uint64_t> dims(rank);
        uint64_t count = 1;
        for (auto& d : dims) {
            d = get_u64(in);
            count *= d;
        }
        if (!in) throw std::runtime_error("load_checkpoint: truncated entry header");

        auto slash = name.find('/');
        if (slash == std::string::npos) throw std::runtime_error("load_checkpoint: malformed name " + name);
        std::string prefix = name.substr(0, slash);
        std::string rest = name.substr(slash + 1);

        if (dtype == static_cast<uint8_t>(DType::Bytes)) {
            std::string value(count, '\0');
            in.read(value.data(), static_cast<std::streamsize>(count));
            if (prefix != "text") throw std::runtime_error("load_checkpoint: byte entry outside text/");
            ck.text[rest] = std::move(value);
            continue;
        }

        std::vector<double> data(count);
        if (dtype == static_cast<uint8_t>(DType::F64)) {
            for (auto& x : data) {
                uint64_t bits = get_u64(in);
                std::memcpy(&x, &bits, 8);
            }
        } else if (dtype == static_cast<uint8_t>(DType::F32)) {
            for (auto& x : data) {
                uint32_t bits = get_u32(in);
                float f;
                std::memcpy(&f, &bits, 4);
                x = static_cast<double>(f);
            }
        } else {
            throw std::runtime_error("load_checkpoint: unknown dtype tag");
        }
        if (!in) throw std::runtime_error("load_checkpoint: truncated payload");

        if (prefix == "scalar") {
            if (count != 1) throw std::runtime_error("load_checkpoint: scalar entry with count != 1");
            ck.scalars[rest] = data[0];
            continue;
        }
        if (ck.stores.empty() || ck.stores.back().first != prefix) {
            bool seen = false;
            for (const auto& [n, s] : ck.stores) seen = seen || n == prefix;
            if (seen) throw std::runtime_error("load_checkpoint: store " + prefix + " is not contiguous");
            ck.stores.emplace_back(prefix, ParamStore{});
        }
        ParamEntry& pe = ck.stores.back().second.add(rest, dims, static_cast<DType>(dtype));
        pe.data = std::move(data);
    }
    return ck;
}

}  // namespace stdlab
