#pragma once

#include <string>

#include "vrg/numerics/parameters.hpp"

namespace vrg::num {

// Layout: "VRGW", u32 version, u32 count, then per parameter: u16 name length,
// UTF-8 name, u8 rank, u32 per dim, little-endian f64 payload.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const ParameterSet& params);
ParameterSet decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& context = "checkpoint");

void save_checkpoint(const std::string& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::string& path);

/// Copies values from `loaded` into `target`, requiring identical names and shapes.
void assign_parameters(ParameterSet& target, const ParameterSet& loaded);

}  // namespace vrg::num
