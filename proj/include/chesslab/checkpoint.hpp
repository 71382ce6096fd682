#pragma once

#include <string>
#include <vector>

#include "chesslab/model.hpp"

namespace chesslab {

// Binary tensor container shared by model and probe checkpoints:
//   u32 magic "CLB1", u32 version, u64 json length, config JSON bytes,
//   u32 tensor count, then per tensor: u32 name length, name bytes,
//   u8 dtype (0 = f32), u8 ndim, u64 dims[ndim], f32 little-endian payload.
// Floats are written raw, so save -> load round-trips bit-exactly on the
// little-endian hosts this project targets.
struct TensorEntry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

struct TensorFile {
    std::string config_json;
    std::vector<TensorEntry> tensors;

    const TensorEntry& find(const std::string& name) const;
};

void save_tensor_file(const TensorFile& file, const std::string& path);
TensorFile load_tensor_file(const std::string& path);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace chesslab
