#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazeforge/htf.hpp"
#include "hazeforge/ops.hpp"
#include "hazeforge/tensor.hpp"

namespace hazeforge {

enum class LayerKind { conv, tconv, batchnorm, prelu, tanh, sigmoid, concat, skip };

struct LayerSpec {
    LayerKind kind;
    int out_channels = 0;
    int kernel = 0;
    int stride = 0;
    int padding = 0;
};

// Declarative layer list plus its parameter tensors, allocated in spec
// order (conv: w,b; tconv: w,b; batchnorm: gamma,beta,running_mean,
// running_var; prelu: slope). Forward passes walk the spec with a
// parameter cursor, so shapes are derivable from the spec alone.
struct NetworkState {
    std::string name;
    double scale = 1.0;
    int depth = 0;  // encoder/decoder stages; generator only
    int in_channels = 0;
    std::vector<LayerSpec> spec;
    std::vector<NamedTensor> params;
    std::vector<bool> trainable;

    Tensor& param(const std::string& pname);
    const Tensor& param(const std::string& pname) const;
    std::size_t parameter_count() const;
};

int scaled_channels(double scale, int base);

// Encoder-decoder transmission estimator; channel sequence at scale 1 is
// 15,30,60,120x5 down and 120x4,60,30,15 then 1 up, 4x4 stride-2 kernels,
// PReLU stages with batch norm from the second stage, additive shortcuts
// between symmetric stages, tanh head. depth < 8 truncates the sequence
// for smaller inputs (input extent must be divisible by 2^depth).
NetworkState build_generator(double scale, int depth = 8);

// Patch classifier: 4x4 convs, channels 48,96,192,384,384 at scale 1 with
// strides 2,2,2,1,1, then a 1x1 conv and sigmoid; analytic receptive
// field 70. in_channels > 1 supports conditioning on the hazy image.
NetworkState build_discriminator(double scale, int in_channels = 1);

// Feature extractor (20,40,80 -> 1-channel map), concat with the
// transmission map, fusion stack (80,40,20 -> 3) with tanh head; 3x3
// stride-1 resolution-preserving convs throughout.
NetworkState build_dehazer(double scale);

// Analytic receptive field of a feed-forward conv-only spec.
int receptive_field(const std::vector<LayerSpec>& spec);

// Conv/tconv weights ~ N(0, 0.02^2), biases 0, bn gamma ~ N(1, 0.02^2),
// beta 0, running stats (0, 1), PReLU slopes 0.25.
void init_params(NetworkState& net, std::uint64_t seed);

Tensor forward_generator(NetworkState& net, const Tensor& input, bool train);
Tensor forward_discriminator(NetworkState& net, const Tensor& input, bool train);
Tensor forward_dehazer(NetworkState& net, const Tensor& image, const Tensor& transmission, bool train);

// [-1,1] <-> [0,1] boundary mappings around the tanh heads.
Tensor to_unit_range(const Tensor& x);
Tensor to_sym_range(const Tensor& x);

// Archive helpers; prefix namespaces the entries ("gen/l00.conv.w").
std::vector<NamedTensor> named_params(const NetworkState& net, const std::string& prefix);
void load_params(NetworkState& net, const std::vector<NamedTensor>& entries, const std::string& prefix);

}  // namespace hazeforge
