#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazeforge/common.hpp"

namespace hazeforge {

struct ManifestRecord {
    std::string id;
    std::string clear_path;  // relative to the manifest's directory
    std::string depth_path;
    std::string hazy_path;
    std::string trans_path;
    real a_r = 0, a_g = 0, a_b = 0;
    real beta = 0;
};

struct Manifest {
    std::uint64_t seed = 0;
    std::string split;
    real a_min = 0, a_max = 0, beta_min = 0, beta_max = 0;
    std::vector<ManifestRecord> records;
};

void save_manifest(const Manifest& m, const std::string& path);

// Loads and validates: ids unique, every referenced path exists.
Manifest load_manifest(const std::string& path);

// Directory the record paths are relative to.
std::string manifest_dir(const std::string& manifest_path);

}  // namespace hazeforge
