#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hazeforge/common.hpp"

namespace hazeforge {

// Full run configuration; sections mirror the INI config file layout.
// Precedence: CLI --set overrides > config file > these defaults.
struct RunConfig {
    // [dataset]
    std::uint64_t data_seed = 7;
    int scenes = 25;
    int test_scenes = 5;
    int draws = 2;
    int image_size = 64;
    double a_min = 0.5;
    double a_max = 1.2;
    double beta_min = 0.4;
    double beta_max = 1.6;
    bool per_channel_a = false;
    std::string source = "procedural";  // "procedural" | "dir"
    std::string source_dir;

    // [network]
    double scale = 0.125;
    int depth = 6;
    bool disc_condition_hazy = false;

    // [loss]
    std::string preset = "I-L2-Per-T";
    double lambda_a = 0.003;
    double lambda_g = 1.0;
    double lambda_p = 1.5;
    bool raw_sums = false;

    // [train]
    std::uint64_t train_seed = 42;
    int batch_size = 4;
    int stage1_iters = 200;
    int stage2_iters = 200;
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double stage2_t_weight = 1.0;
    int d_steps = 1;

    // [paths]
    std::string data_dir = "data";
    std::string out_dir = "out";
};

// Field registry: "section.key" name plus string get/set, driving the
// parser, the serializer, and per-field override tests.
struct ConfigField {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<ConfigField>& config_fields();

void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key_eq_value);  // "train.lr=0.01"
std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config_text(const std::string& text);

// FNV-1a of the canonical serialization; stable fingerprint for reports.
std::string config_fingerprint(const RunConfig& cfg);

}  // namespace hazeforge
