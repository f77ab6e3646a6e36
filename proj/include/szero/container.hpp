#pragma once

#include <filesystem>
#include <string>

#include "szero/model.hpp"

namespace szero {

// SZM1 model container:
//
//   bytes 0..3   "SZM1"
//   bytes 4..7   header length H, uint32 little-endian
//   next H bytes UTF-8 JSON header, keys sorted, no whitespace, no floats
//   remainder    float32 little-endian tensors, concatenated in header order
//
// See docs/szm1_format.md for the header schema.

/// Serialized container bytes. Parameters are narrowed to float32.
std::string serialize_model(const Model& model);

/// Parses container bytes. Parameters are widened to 64-bit and the model
/// records StorageDtype::F32. Throws ParseError naming the offending field.
Model parse_model(const std::string& bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// Rounds every parameter to the nearest float32 value, so the in-memory
/// model equals what save_model/load_model reproduces.
void round_parameters_to_f32(Model& model);

}  // namespace szero
