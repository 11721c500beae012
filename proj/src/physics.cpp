#include "hazeforge/physics.hpp"

#include <algorithm>
#include <cmath>

#include "hazeforge/rng.hpp"

namespace hazeforge {

namespace {

void require_image(const Tensor& t, const char* who) {
    if (t.rank() != 3 || t.extent(0) != 3)
        throw dim_error(std::string(who) + ": expected [3,H,W] image, got " + shape_str(t.shape()));
}

void require_map(const Tensor& t, const char* who) {
    if (t.rank() != 2)
        throw dim_error(std::string(who) + ": expected [H,W] map, got " + shape_str(t.shape()));
}

// Airlight for channel c at pixel i, honoring a spatial map when present.
inline real airlight_at(const HazeParams& p, std::size_t c, std::size_t i, std::size_t plane) {
    if (p.a_map) return p.a_map->data()[c * plane + i];
    return p.a[c];
}

}  // namespace

Tensor depth_to_transmission(const Tensor& depth, real beta) {
    require_map(depth, "depth_to_transmission");
    if (!(beta > 0)) throw numeric_error("depth_to_transmission: beta must be positive");
    if (!depth.all_finite()) throw numeric_error("depth_to_transmission: non-finite depth");
    Tensor t = Tensor::zeros(depth.shape());
    const std::size_t n = depth.numel();
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(-beta * depth[i]);
    return t;
}

SynthResult synthesize_hazy(const Tensor& clear, const Tensor& transmission, const HazeParams& params) {
    require_image(clear, "synthesize_hazy");
    require_map(transmission, "synthesize_hazy");
    const std::size_t H = clear.extent(1), W = clear.extent(2);
    if (transmission.extent(0) != H || transmission.extent(1) != W)
        throw dim_error("synthesize_hazy: transmission " + shape_str(transmission.shape()) +
                        " does not match image " + shape_str(clear.shape()));
    if (params.a_map && params.a_map->shape() != clear.shape())
        throw dim_error("synthesize_hazy: atmospheric light map shape mismatch");

    SynthResult res;
    res.image = Tensor::zeros(clear.shape());
    const std::size_t plane = H * W;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) {
            const real t = transmission[i];
            const real a = airlight_at(params, c, i, plane);
            real v = clear[c * plane + i] * t + a * (real(1) - t);
            if (v < 0) {
                v = 0;
                ++res.clamped;
            } else if (v > 1) {
                v = 1;
                ++res.clamped;
            }
            res.image[c * plane + i] = v;
        }
    return res;
}

Tensor invert_closed_form(const Tensor& hazy, const Tensor& transmission, const HazeParams& params,
                          real t_floor) {
    require_image(hazy, "invert_closed_form");
    require_map(transmission, "invert_closed_form");
    if (!(t_floor > 0)) throw numeric_error("invert_closed_form: t_floor must be positive");
    const std::size_t H = hazy.extent(1), W = hazy.extent(2);
    if (transmission.extent(0) != H || transmission.extent(1) != W)
        throw dim_error("invert_closed_form: transmission/image shape mismatch");

    Tensor out = Tensor::zeros(hazy.shape());
    const std::size_t plane = H * W;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) {
            const real t = std::max(transmission[i], t_floor);
            const real a = airlight_at(params, c, i, plane);
            real v = (hazy[c * plane + i] - a * (real(1) - transmission[i])) / t;
            out[c * plane + i] = std::clamp(v, real(0), real(1));
        }
    return out;
}

Tensor normalize_depth(const Tensor& depth) {
    require_map(depth, "normalize_depth");
    if (!depth.all_finite()) throw numeric_error("normalize_depth: non-finite depth");
    real lo = depth[0], hi = depth[0];
    for (std::size_t i = 0; i < depth.numel(); ++i) {
        lo = std::min(lo, depth[i]);
        hi = std::max(hi, depth[i]);
    }
    if (lo < 0) throw numeric_error("normalize_depth: negative depth");
    Tensor out = Tensor::zeros(depth.shape());
    const real span = hi - lo;
    if (span <= 0) return out;  // constant depth maps to zero
    for (std::size_t i = 0; i < depth.numel(); ++i) out[i] = (depth[i] - lo) / span;
    return out;
}

std::vector<SceneSample> generate_dataset(const std::vector<ClearDepthPair>& pairs,
                                          const DatasetParams& params) {
    if (params.per_image_draws < 1)
        throw config_error("generate_dataset: per_image_draws must be >= 1");
    if (!(params.a_min <= params.a_max) || !(params.beta_min <= params.beta_max) ||
        !(params.beta_min > 0))
        throw config_error("generate_dataset: bad parameter ranges");

    std::vector<SceneSample> samples;
    samples.reserve(pairs.size() * static_cast<std::size_t>(params.per_image_draws));
    Rng rng(params.seed);
    for (const auto& pair : pairs) {
        if (pair.depth.numel() == 0) throw io_error("generate_dataset: missing depth for " + pair.id);
        if (pair.clear.extent(1) != pair.depth.extent(0) || pair.clear.extent(2) != pair.depth.extent(1))
            throw dim_error("generate_dataset: clear/depth shape mismatch for " + pair.id);
        for (int d = 0; d < params.per_image_draws; ++d) {
            SceneSample s;
            s.id = pair.id + "_d" + std::to_string(d);
            s.clear = pair.clear;
            s.depth = pair.depth;
            if (params.per_channel_a) {
                for (int c = 0; c < 3; ++c)
                    s.params.a[c] = static_cast<real>(rng.uniform(params.a_min, params.a_max));
            } else {
                const real a = static_cast<real>(rng.uniform(params.a_min, params.a_max));
                s.params.a = {a, a, a};
            }
            s.params.beta = static_cast<real>(rng.uniform(params.beta_min, params.beta_max));
            s.transmission = depth_to_transmission(s.depth, s.params.beta);
            SynthResult synth = synthesize_hazy(s.clear, s.transmission, s.params);
            s.hazy = synth.image;
            s.clamped_pixels = synth.clamped;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

ClearDepthPair procedural_scene(std::uint64_t seed, std::size_t height, std::size_t width,
                                const std::string& id) {
    Rng rng(splitmix64(seed));
    ClearDepthPair pair;
    pair.id = id;
    pair.clear = Tensor::zeros({3, height, width});
    pair.depth = Tensor::zeros({height, width});
    const std::size_t plane = height * width;

    // Background: two-color gradient, far side kept dim so deep-haze pixels
    // are not dominated by bright scene content; each background color has
    // at least one low channel for dark-channel-style statistics.
    std::array<double, 3> near_color, far_color;
    for (int c = 0; c < 3; ++c) {
        near_color[c] = rng.uniform(0.25, 0.9);
        far_color[c] = rng.uniform(0.05, 0.45);
    }
    near_color[rng.index(3)] = rng.uniform(0.02, 0.2);
    const bool horizontal_ramp = rng.uniform01() < 0.5;

    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double frac = horizontal_ramp ? static_cast<double>(x) / (width - 1)
                                                : static_cast<double>(y) / (height - 1);
            pair.depth[y * width + x] = static_cast<real>(frac);
            for (std::size_t c = 0; c < 3; ++c)
                pair.clear[c * plane + y * width + x] =
                    static_cast<real>(near_color[c] * (1.0 - frac) + far_color[c] * frac);
        }

    // Rectangles at assorted depths; saturated colors with one dark channel,
    // plus the occasional near-black block.
    const std::size_t n_rects = 3 + rng.index(4);
    for (std::size_t r = 0; r < n_rects; ++r) {
        const std::size_t rw = width / 8 + rng.index(std::max<std::size_t>(width / 4, 1));
        const std::size_t rh = height / 8 + rng.index(std::max<std::size_t>(height / 4, 1));
        const std::size_t x0 = rng.index(width - std::min(rw, width - 1));
        const std::size_t y0 = rng.index(height - std::min(rh, height - 1));
        const double rect_depth = rng.uniform(0.0, 0.85);
        std::array<double, 3> color;
        if (rng.uniform01() < 0.25) {
            for (int c = 0; c < 3; ++c) color[c] = rng.uniform(0.0, 0.12);
        } else {
            for (int c = 0; c < 3; ++c) color[c] = rng.uniform(0.1, 0.95);
            color[rng.index(3)] = rng.uniform(0.0, 0.15);
        }
        for (std::size_t y = y0; y < std::min(y0 + rh, height); ++y)
            for (std::size_t x = x0; x < std::min(x0 + rw, width); ++x) {
                pair.depth[y * width + x] = static_cast<real>(rect_depth);
                for (std::size_t c = 0; c < 3; ++c)
                    pair.clear[c * plane + y * width + x] = static_cast<real>(color[c]);
            }
    }
    return pair;
}

}  // namespace hazeforge
