#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hazeforge/ops.hpp"

namespace hazeforge {

// Loss term weights and the ablation toggles. raw_sums switches off the
// batch/element-count normalization and reverts to plain summed errors.
struct LossWeights {
    real lambda_a = real(0.003);
    real lambda_g = real(1.0);
    real lambda_p = real(1.5);
    bool enable_adv = true;
    bool enable_grad = true;
    bool enable_perc = true;
    bool enable_transmission_branch = true;
    bool raw_sums = false;
};

// Exact ablation preset names, in grid order.
const std::vector<std::string>& ablation_presets();
LossWeights preset_weights(const std::string& preset);
bool is_image_preset(const std::string& preset);  // I-* vs T-*

// Fixed (frozen) conv feature extractor standing in for a pretrained
// perceptual network: 3x3 stride-1 convs with channels 16/32/64, fixed
// PReLU, 2x2 average pooling between stages; tap after the last stage.
// The zero-stage variant is the identity tap.
class FeatureNet {
public:
    static FeatureNet identity();
    static FeatureNet random(std::uint64_t seed);

    Tensor forward(const Tensor& image) const;  // [B,3,H,W] -> features
    bool is_identity() const { return weights_.empty(); }

private:
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
    std::vector<Tensor> slopes_;
};

// Unweighted term values for curve logging; filled when requested.
struct LossParts {
    double total = 0;
    double e = 0;
    double a = 0;
    double g = 0;
    double p = 0;
};

// Sum of squared error, divided by batch size (leading extent) unless raw.
Tensor euclidean_loss(const Tensor& pred, const Tensor& target, bool raw_sums = false);

Tensor adversarial_g_loss(const Tensor& d_out_on_fake);
Tensor adversarial_d_loss(const Tensor& d_out_real, const Tensor& d_out_fake);

// Forward differences along rows (Hx) and columns (Hy).
std::pair<Tensor, Tensor> gradient_ops(const Tensor& img);
Tensor gradient_loss(const Tensor& pred, const Tensor& target, bool raw_sums = false);

// Euclidean distance between tap features, divided by feature element
// count unless raw.
Tensor perceptual_loss(const Tensor& pred, const Tensor& target, const FeatureNet& feat,
                       bool raw_sums = false);

// L_E + lambda_a * L_A + lambda_g * L_G, terms per toggles.
Tensor transmission_loss(const Tensor& pred_t, const Tensor& target_t,
                         const Tensor* d_out_on_fake, const LossWeights& w,
                         LossParts* parts = nullptr);

// L_E + lambda_p * L_P, perceptual per toggle.
Tensor dehazing_loss(const Tensor& pred_img, const Tensor& target_img,
                     const FeatureNet* feat, const LossWeights& w,
                     LossParts* parts = nullptr);

}  // namespace hazeforge
