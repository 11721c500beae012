#include "hazeforge/networks.hpp"

#include <algorithm>
#include <cmath>

#include "hazeforge/rng.hpp"

namespace hazeforge {

namespace {

std::string layer_prefix(std::size_t idx, const char* kind) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "l%02zu.%s", idx, kind);
    return buf;
}

// Appends layers and allocates parameter tensors as it goes.
struct Builder {
    NetworkState net;
    int channels;

    Builder(std::string name, double scale, int in_channels) : channels(in_channels) {
        net.name = std::move(name);
        net.scale = scale;
        net.in_channels = in_channels;
    }

    void add_param(const std::string& pname, Shape shape, bool is_trainable) {
        net.params.push_back({pname, Tensor::zeros(std::move(shape))});
        net.trainable.push_back(is_trainable);
    }

    void conv(int out_c, int k, int s, int p) {
        const std::size_t idx = net.spec.size();
        net.spec.push_back({LayerKind::conv, out_c, k, s, p});
        const std::string base = layer_prefix(idx, "conv");
        add_param(base + ".w",
                  {static_cast<std::size_t>(out_c), static_cast<std::size_t>(channels),
                   static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
                  true);
        add_param(base + ".b", {static_cast<std::size_t>(out_c)}, true);
        channels = out_c;
    }

    void tconv(int out_c, int k, int s, int p) {
        const std::size_t idx = net.spec.size();
        net.spec.push_back({LayerKind::tconv, out_c, k, s, p});
        const std::string base = layer_prefix(idx, "tconv");
        add_param(base + ".w",
                  {static_cast<std::size_t>(channels), static_cast<std::size_t>(out_c),
                   static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
                  true);
        add_param(base + ".b", {static_cast<std::size_t>(out_c)}, true);
        channels = out_c;
    }

    void bn() {
        const std::size_t idx = net.spec.size();
        net.spec.push_back({LayerKind::batchnorm, channels, 0, 0, 0});
        const std::string base = layer_prefix(idx, "bn");
        const Shape s = {static_cast<std::size_t>(channels)};
        add_param(base + ".gamma", s, true);
        add_param(base + ".beta", s, true);
        add_param(base + ".running_mean", s, false);
        add_param(base + ".running_var", s, false);
    }

    void prelu_layer() {
        const std::size_t idx = net.spec.size();
        net.spec.push_back({LayerKind::prelu, channels, 0, 0, 0});
        add_param(layer_prefix(idx, "prelu") + ".slope",
                  {static_cast<std::size_t>(channels)}, true);
    }

    void tanh_layer() { net.spec.push_back({LayerKind::tanh, channels, 0, 0, 0}); }
    void sigmoid_layer() { net.spec.push_back({LayerKind::sigmoid, channels, 0, 0, 0}); }

    void concat_marker(int extra) {
        channels += extra;
        net.spec.push_back({LayerKind::concat, channels, 0, 0, 0});
    }

    void skip_marker() { net.spec.push_back({LayerKind::skip, channels, 0, 0, 0}); }
};

const int kGeneratorChannels[8] = {15, 30, 60, 120, 120, 120, 120, 120};
const int kDiscriminatorChannels[5] = {48, 96, 192, 384, 384};
const int kDiscriminatorStrides[5] = {2, 2, 2, 1, 1};
const int kDehazerFeatChannels[3] = {20, 40, 80};
const int kDehazerFusionChannels[3] = {80, 40, 20};

void check_scale(double scale) {
    if (!(scale > 0.0) || scale > 1.0)
        throw config_error("network scale must be in (0, 1], got " + std::to_string(scale));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

int scaled_channels(double scale, int base) {
    return std::max(1, static_cast<int>(std::ceil(scale * base)));
}

Tensor& NetworkState::param(const std::string& pname) {
    for (auto& p : params)
        if (p.name == pname) return p.tensor;
    throw state_error("no parameter named " + pname + " in " + name);
}

const Tensor& NetworkState::param(const std::string& pname) const {
    for (const auto& p : params)
        if (p.name == pname) return p.tensor;
    throw state_error("no parameter named " + pname + " in " + name);
}

std::size_t NetworkState::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
        if (trainable[i]) n += params[i].tensor.numel();
    return n;
}

NetworkState build_generator(double scale, int depth) {
    check_scale(scale);
    if (depth < 2 || depth > 8)
        throw config_error("generator depth must be in [2, 8], got " + std::to_string(depth));
    Builder b("generator", scale, 3);
    b.net.depth = depth;

    std::vector<int> enc(depth);
    for (int i = 0; i < depth; ++i) enc[i] = scaled_channels(scale, kGeneratorChannels[i]);

    for (int i = 0; i < depth; ++i) {
        b.conv(enc[i], 4, 2, 1);
        if (i > 0) b.bn();
        b.prelu_layer();
    }
    for (int i = 0; i < depth; ++i) {
        if (i > 0) b.skip_marker();
        const int out_c = i + 1 < depth ? enc[depth - 2 - i] : 1;
        b.tconv(out_c, 4, 2, 1);
        if (i + 1 < depth) {
            b.bn();
            b.prelu_layer();
        } else {
            b.tanh_layer();
        }
    }
    return std::move(b.net);
}

NetworkState build_discriminator(double scale, int in_channels) {
    check_scale(scale);
    if (in_channels < 1) throw config_error("discriminator input channels must be >= 1");
    Builder b("discriminator", scale, in_channels);
    for (int i = 0; i < 5; ++i) {
        b.conv(scaled_channels(scale, kDiscriminatorChannels[i]), 4, kDiscriminatorStrides[i], 1);
        b.bn();
        if (i > 0) b.prelu_layer();
    }
    b.conv(1, 1, 1, 0);
    b.sigmoid_layer();
    return std::move(b.net);
}

NetworkState build_dehazer(double scale) {
    check_scale(scale);
    Builder b("dehazer", scale, 3);
    for (int i = 0; i < 3; ++i) {
        b.conv(scaled_channels(scale, kDehazerFeatChannels[i]), 3, 1, 1);
        if (i > 0) b.bn();
        b.prelu_layer();
    }
    b.conv(1, 3, 1, 1);
    b.concat_marker(1);
    for (int i = 0; i < 3; ++i) {
        b.conv(scaled_channels(scale, kDehazerFusionChannels[i]), 3, 1, 1);
        if (i > 0) b.bn();
        b.prelu_layer();
    }
    b.conv(3, 3, 1, 1);
    b.tanh_layer();
    return std::move(b.net);
}

int receptive_field(const std::vector<LayerSpec>& spec) {
    int r = 1, jump = 1;
    for (const auto& l : spec) {
        switch (l.kind) {
            case LayerKind::conv:
                r += (l.kernel - 1) * jump;
                jump *= l.stride;
                break;
            case LayerKind::batchnorm:
            case LayerKind::prelu:
            case LayerKind::tanh:
            case LayerKind::sigmoid:
                break;
            default:
                throw state_error("receptive_field: spec is not a feed-forward conv stack");
        }
    }
    return r;
}

void init_params(NetworkState& net, std::uint64_t seed) {
    Rng rng(splitmix64(seed ^ splitmix64(fnv1a(net.name))));
    for (auto& p : net.params) {
        const std::string& n = p.name;
        Tensor& t = p.tensor;
        if (n.ends_with(".w")) {
            for (std::size_t i = 0; i < t.numel(); ++i)
                t[i] = static_cast<real>(rng.normal(0.0, 0.02));
        } else if (n.ends_with(".gamma")) {
            for (std::size_t i = 0; i < t.numel(); ++i)
                t[i] = static_cast<real>(rng.normal(1.0, 0.02));
        } else if (n.ends_with(".slope")) {
            for (std::size_t i = 0; i < t.numel(); ++i) t[i] = real(0.25);
        } else if (n.ends_with(".running_var")) {
            for (std::size_t i = 0; i < t.numel(); ++i) t[i] = real(1);
        } else {
            for (std::size_t i = 0; i < t.numel(); ++i) t[i] = real(0);
        }
    }
}

namespace {

// Applies one parameterized/pointwise layer, advancing the param cursor.
Tensor apply_layer(NetworkState& net, std::size_t& pi, const LayerSpec& l, const Tensor& x, bool train) {
    switch (l.kind) {
        case LayerKind::conv: {
            const Tensor& w = net.params[pi].tensor;
            const Tensor& b = net.params[pi + 1].tensor;
            pi += 2;
            return conv2d(x, w, b, l.stride, l.padding);
        }
        case LayerKind::tconv: {
            const Tensor& w = net.params[pi].tensor;
            const Tensor& b = net.params[pi + 1].tensor;
            pi += 2;
            return transpose_conv2d(x, w, b, l.stride, l.padding);
        }
        case LayerKind::batchnorm: {
            const Tensor& gamma = net.params[pi].tensor;
            const Tensor& beta = net.params[pi + 1].tensor;
            Tensor rm = net.params[pi + 2].tensor;
            Tensor rv = net.params[pi + 3].tensor;
            pi += 4;
            return batch_norm(x, gamma, beta, rm, rv, train);
        }
        case LayerKind::prelu: {
            const Tensor& slope = net.params[pi].tensor;
            pi += 1;
            return prelu(x, slope);
        }
        case LayerKind::tanh:
            return tanh_act(x);
        case LayerKind::sigmoid:
            return sigmoid_act(x);
        default:
            throw state_error("apply_layer: structural marker reached the layer interpreter");
    }
}

// Additive shortcut; when ceiling-scaled channel counts disagree the sum
// covers the overlapping channel prefix and the remainder passes through.
Tensor add_shortcut(const Tensor& x, const Tensor& enc) {
    const std::size_t cx = x.extent(1), ce = enc.extent(1);
    if (cx == ce) return skip_add(x, enc);
    const std::size_t c = std::min(cx, ce);
    Tensor head = skip_add(slice_channels(x, 0, c), slice_channels(enc, 0, c));
    if (cx > c) return concat_channels(head, slice_channels(x, c, cx));
    return head;
}

}  // namespace

Tensor forward_generator(NetworkState& net, const Tensor& input, bool train) {
    if (input.rank() != 4 || input.extent(1) != static_cast<std::size_t>(net.in_channels))
        throw dim_error("generator: expected [B," + std::to_string(net.in_channels) +
                        ",H,W] input, got " + shape_str(input.shape()));
    const std::size_t div = std::size_t(1) << net.depth;
    if (input.extent(2) % div != 0 || input.extent(3) % div != 0)
        throw dim_error("generator: input spatial size " + shape_str(input.shape()) +
                        " not divisible by 2^" + std::to_string(net.depth));

    Tensor x = input;
    std::vector<Tensor> stage_outputs;
    std::size_t pi = 0;
    bool in_encoder = true;
    for (const auto& l : net.spec) {
        if (l.kind == LayerKind::skip) {
            x = add_shortcut(x, stage_outputs.back());
            stage_outputs.pop_back();
            continue;
        }
        if (in_encoder && l.kind == LayerKind::tconv) in_encoder = false;
        // Stage outputs are captured at the next stage's conv, so the
        // bottleneck never lands on the stack; skips then pop in LIFO
        // order against the symmetric decoder stages.
        const bool stage_boundary = in_encoder && (l.kind == LayerKind::conv);
        if (stage_boundary && pi > 0) stage_outputs.push_back(x);
        x = apply_layer(net, pi, l, x, train);
    }
    return x;
}

Tensor forward_discriminator(NetworkState& net, const Tensor& input, bool train) {
    if (input.rank() != 4 || input.extent(1) != static_cast<std::size_t>(net.in_channels))
        throw dim_error("discriminator: expected [B," + std::to_string(net.in_channels) +
                        ",H,W] input, got " + shape_str(input.shape()));
    Tensor x = input;
    std::size_t pi = 0;
    for (const auto& l : net.spec) x = apply_layer(net, pi, l, x, train);
    return x;
}

Tensor forward_dehazer(NetworkState& net, const Tensor& image, const Tensor& transmission, bool train) {
    if (image.rank() != 4 || image.extent(1) != 3)
        throw dim_error("dehazer: expected [B,3,H,W] image, got " + shape_str(image.shape()));
    if (transmission.rank() != 4 || transmission.extent(1) != 1 ||
        transmission.extent(0) != image.extent(0) || transmission.extent(2) != image.extent(2) ||
        transmission.extent(3) != image.extent(3))
        throw dim_error("dehazer: transmission " + shape_str(transmission.shape()) +
                        " does not match image " + shape_str(image.shape()));
    Tensor x = image;
    std::size_t pi = 0;
    for (const auto& l : net.spec) {
        if (l.kind == LayerKind::concat) {
            x = concat_channels(x, transmission);
            continue;
        }
        x = apply_layer(net, pi, l, x, train);
    }
    return x;
}

Tensor to_unit_range(const Tensor& x) { return affine(x, real(0.5), real(0.5)); }
Tensor to_sym_range(const Tensor& x) { return affine(x, real(2), real(-1)); }

std::vector<NamedTensor> named_params(const NetworkState& net, const std::string& prefix) {
    std::vector<NamedTensor> out;
    out.reserve(net.params.size());
    for (const auto& p : net.params) out.push_back({prefix + p.name, p.tensor});
    return out;
}

void load_params(NetworkState& net, const std::vector<NamedTensor>& entries, const std::string& prefix) {
    for (auto& p : net.params) {
        const std::string want = prefix + p.name;
        bool found = false;
        for (const auto& e : entries) {
            if (e.name != want) continue;
            if (e.tensor.shape() != p.tensor.shape())
                throw format_error("checkpoint: shape mismatch for " + want + ": " +
                                   shape_str(e.tensor.shape()) + " vs " + shape_str(p.tensor.shape()));
            p.tensor.vec() = e.tensor.vec();
            found = true;
            break;
        }
        if (!found) throw format_error("checkpoint: missing tensor " + want);
    }
}

}  // namespace hazeforge
