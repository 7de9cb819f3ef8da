#pragma once

#include <string>

#include "ainc/params.hpp"

namespace ainc {

// Binary parameter checkpoint, all integers and doubles little-endian:
//   magic "AINC" | version u32 (=1) | count u32
//   per tensor: name_len u16, name bytes (UTF-8), rank u8,
//               dims u32 x rank, values f64 row-major
// Truncation, a bad magic, an unsupported version, or inconsistent sizes are
// reported as errors naming what was found.
void save_checkpoint(const std::string& path, const ParamStore& store);
ParamStore load_checkpoint(const std::string& path);

}  // namespace ainc
