#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stdlab/params.hpp"

namespace stdlab {

// Binary checkpoint container.
//
// Layout (all integers little-endian):
//   magic "STDL" | version u32 | entry_count u64
//   per entry: name_len u64 | name bytes | dtype u8 (0=f32, 1=f64, 2=bytes)
//            | rank u64 | dims u64 each | raw little-endian payload
//
// Parameter entries are named "<store>/<param>"; text metadata is stored under
// "text/<key>" with the byte dtype, scalar metadata under "scalar/<key>" as a
// single f64. Save order is stores (as given), then scalars, then texts; the
// loader preserves file order so a save/load/save round trip is byte-identical.
struct LoadedCheckpoint {
    std::vector<std::pair<std::string, ParamStore>> stores;
    std::map<std::string, std::string> text;
    std::map<std::string, double> scalars;

    const ParamStore& store(const std::string& name) const;
    bool has_store(const std::string& name) const;
};

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParamStore*>>& stores,
                     const std::map<std::string, double>& scalars,
                     const std::map<std::string, std::string>& text);

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace stdlab
