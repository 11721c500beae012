#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hazeforge/tensor.hpp"

namespace hazeforge {

// Atmospheric light: per-channel scalars, optionally a spatially varying
// map [3,H,W] that takes precedence when present.
struct HazeParams {
    std::array<real, 3> a{real(1), real(1), real(1)};
    std::optional<Tensor> a_map;
    real beta = real(1);

    static HazeParams gray(real a_value, real beta_value) {
        HazeParams p;
        p.a = {a_value, a_value, a_value};
        p.beta = beta_value;
        return p;
    }
};

// One synthesized record: clear image J, depth d, transmission t, hazy
// image I, all spatially consistent. Images are [3,H,W] in [0,1]; depth
// and transmission are [H,W].
struct SceneSample {
    std::string id;
    Tensor clear;
    Tensor depth;
    Tensor transmission;
    Tensor hazy;
    HazeParams params;
    std::size_t clamped_pixels = 0;
};

struct SynthResult {
    Tensor image;
    std::size_t clamped = 0;
};

// d must be normalized to [0,1] and finite; beta > 0.
Tensor depth_to_transmission(const Tensor& depth, real beta);

// I = J*t + A*(1-t), clamped to [0,1]; the clamp count is reported.
SynthResult synthesize_hazy(const Tensor& clear, const Tensor& transmission, const HazeParams& params);

// J = (I - A*(1-t)) / max(t, t_floor), clamped to [0,1].
Tensor invert_closed_form(const Tensor& hazy, const Tensor& transmission, const HazeParams& params,
                          real t_floor = real(0.05));

// Rescales arbitrary nonnegative depth data to [0,1].
Tensor normalize_depth(const Tensor& depth);

struct ClearDepthPair {
    std::string id;
    Tensor clear;  // [3,H,W] in [0,1]
    Tensor depth;  // [H,W] normalized
};

struct DatasetParams {
    int per_image_draws = 1;
    real a_min = real(0.5);
    real a_max = real(1.2);
    real beta_min = real(0.4);
    real beta_max = real(1.6);
    bool per_channel_a = false;
    std::uint64_t seed = 0;
};

// Draws (A, beta) per (image, draw) pair and synthesizes; deterministic
// under seed, sample ids are "<pair id>_d<draw>".
std::vector<SceneSample> generate_dataset(const std::vector<ClearDepthPair>& pairs,
                                          const DatasetParams& params);

// Seeded procedural scene: gradient background plus colored rectangles,
// depth ramp with per-object plateaus. Self-contained substitute for an
// external RGB+depth corpus.
ClearDepthPair procedural_scene(std::uint64_t seed, std::size_t height, std::size_t width,
                                const std::string& id);

}  // namespace hazeforge
