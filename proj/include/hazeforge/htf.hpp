#pragma once

#include <string>
#include <vector>

#include "hazeforge/tensor.hpp"

namespace hazeforge {

// HTF1 single-tensor file: magic "HTF1", u8 dtype (0 = f64, 1 = f32),
// u8 rank, rank x u64 little-endian extents, raw little-endian payload.
void save_htf(const Tensor& t, const std::string& path);
Tensor load_htf(const std::string& path);

std::vector<unsigned char> encode_htf(const Tensor& t);
Tensor decode_htf(const unsigned char* bytes, std::size_t size);

// Archive of named HTF1 blobs: magic "HTA1", u64 count, then per entry
// u16 name length, name bytes, u64 absolute offset, u64 byte size,
// followed by the blobs. Entry order is preserved.
struct NamedTensor {
    std::string name;
    Tensor tensor;
};

void save_archive(const std::vector<NamedTensor>& entries, const std::string& path);
std::vector<NamedTensor> load_archive(const std::string& path);

}  // namespace hazeforge
