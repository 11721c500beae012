#include "hazeforge/losses.hpp"

#include <algorithm>

#include "hazeforge/rng.hpp"

namespace hazeforge {

const std::vector<std::string>& ablation_presets() {
    static const std::vector<std::string> names = {
        "T-L2", "T-L2-G", "T-L2-G-GAN", "I-L2-noT", "I-L2-T", "I-L2-Per-T"};
    return names;
}

LossWeights preset_weights(const std::string& preset) {
    LossWeights w;
    if (preset == "T-L2") {
        w.enable_adv = false;
        w.enable_grad = false;
        w.enable_perc = false;
    } else if (preset == "T-L2-G") {
        w.enable_adv = false;
        w.enable_grad = true;
        w.enable_perc = false;
    } else if (preset == "T-L2-G-GAN") {
        w.enable_adv = true;
        w.enable_grad = true;
        w.enable_perc = false;
    } else if (preset == "I-L2-noT") {
        w.enable_adv = false;
        w.enable_grad = false;
        w.enable_perc = false;
        w.enable_transmission_branch = false;
    } else if (preset == "I-L2-T") {
        // transmission branch trained with its full loss
        w.enable_adv = true;
        w.enable_grad = true;
        w.enable_perc = false;
    } else if (preset == "I-L2-Per-T") {
        w.enable_adv = true;
        w.enable_grad = true;
        w.enable_perc = true;
    } else {
        throw config_error("unknown ablation preset: " + preset);
    }
    return w;
}

bool is_image_preset(const std::string& preset) {
    return preset.rfind("I-", 0) == 0;
}

// --------------------------------------------------------------------------
// FeatureNet

FeatureNet FeatureNet::identity() { return FeatureNet(); }

FeatureNet FeatureNet::random(std::uint64_t seed) {
    FeatureNet f;
    Rng rng(splitmix64(seed ^ 0x5eedfea7u));
    const int channels[4] = {3, 16, 32, 64};
    for (int s = 0; s < 3; ++s) {
        Tensor w = Tensor::zeros({static_cast<std::size_t>(channels[s + 1]),
                                  static_cast<std::size_t>(channels[s]), 3, 3});
        for (std::size_t i = 0; i < w.numel(); ++i)
            w[i] = static_cast<real>(rng.normal(0.0, 0.1));
        f.weights_.push_back(w);
        f.biases_.push_back(Tensor::zeros({static_cast<std::size_t>(channels[s + 1])}));
        f.slopes_.push_back(Tensor::full({static_cast<std::size_t>(channels[s + 1])}, real(0.25)));
    }
    return f;
}

Tensor FeatureNet::forward(const Tensor& image) const {
    if (is_identity()) return image;
    if (image.rank() != 4 || image.extent(1) != weights_[0].extent(1))
        throw dim_error("FeatureNet: expected [B," + std::to_string(weights_[0].extent(1)) +
                        ",H,W] input, got " + shape_str(image.shape()));
    Tensor x = image;
    for (std::size_t s = 0; s < weights_.size(); ++s) {
        x = conv2d(x, weights_[s], biases_[s], 1, 1);
        x = prelu(x, slopes_[s]);
        if (s + 1 < weights_.size()) x = avg_pool2d(x, 2);
    }
    return x;
}

// --------------------------------------------------------------------------
// loss terms

Tensor euclidean_loss(const Tensor& pred, const Tensor& target, bool raw_sums) {
    if (!pred.same_shape(target))
        throw dim_error("euclidean_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                        shape_str(target.shape()));
    Tensor d = sub(pred, target);
    Tensor s = sum_all(mul(d, d));
    if (raw_sums) return s;
    const real batch = static_cast<real>(pred.rank() > 0 ? pred.extent(0) : 1);
    return scale(s, real(1) / batch);
}

Tensor adversarial_g_loss(const Tensor& d_out_on_fake) {
    return scale(mean_all(log_eps(d_out_on_fake)), real(-1));
}

Tensor adversarial_d_loss(const Tensor& d_out_real, const Tensor& d_out_fake) {
    Tensor real_term = scale(mean_all(log_eps(d_out_real)), real(-1));
    Tensor fake_term = scale(mean_all(log_eps(affine(d_out_fake, real(-1), real(1)))), real(-1));
    return skip_add(real_term, fake_term);
}

std::pair<Tensor, Tensor> gradient_ops(const Tensor& img) {
    return {diff_x(img), diff_y(img)};
}

Tensor gradient_loss(const Tensor& pred, const Tensor& target, bool raw_sums) {
    if (!pred.same_shape(target))
        throw dim_error("gradient_loss: shape mismatch");
    Tensor lx = euclidean_loss(diff_x(pred), diff_x(target), raw_sums);
    Tensor ly = euclidean_loss(diff_y(pred), diff_y(target), raw_sums);
    return skip_add(lx, ly);
}

Tensor perceptual_loss(const Tensor& pred, const Tensor& target, const FeatureNet& feat,
                       bool raw_sums) {
    if (!pred.same_shape(target))
        throw dim_error("perceptual_loss: shape mismatch");
    Tensor fp = feat.forward(pred);
    Tensor ft = feat.forward(target);
    Tensor d = sub(fp, ft);
    Tensor s = sum_all(mul(d, d));
    if (raw_sums) return s;
    return scale(s, real(1) / static_cast<real>(fp.numel()));
}

Tensor transmission_loss(const Tensor& pred_t, const Tensor& target_t,
                         const Tensor* d_out_on_fake, const LossWeights& w,
                         LossParts* parts) {
    Tensor total = euclidean_loss(pred_t, target_t, w.raw_sums);
    if (parts) parts->e = static_cast<double>(total[0]);
    if (w.enable_adv) {
        if (!d_out_on_fake)
            throw state_error("transmission_loss: adversarial term enabled but no discriminator output");
        Tensor a = adversarial_g_loss(*d_out_on_fake);
        if (parts) parts->a = static_cast<double>(a[0]);
        total = skip_add(total, scale(a, w.lambda_a));
    }
    if (w.enable_grad) {
        Tensor g = gradient_loss(pred_t, target_t, w.raw_sums);
        if (parts) parts->g = static_cast<double>(g[0]);
        total = skip_add(total, scale(g, w.lambda_g));
    }
    if (parts) parts->total = static_cast<double>(total[0]);
    return total;
}

Tensor dehazing_loss(const Tensor& pred_img, const Tensor& target_img,
                     const FeatureNet* feat, const LossWeights& w,
                     LossParts* parts) {
    Tensor total = euclidean_loss(pred_img, target_img, w.raw_sums);
    if (parts) parts->e = static_cast<double>(total[0]);
    if (w.enable_perc) {
        if (!feat)
            throw state_error("dehazing_loss: perceptual term enabled but no feature network");
        Tensor p = perceptual_loss(pred_img, target_img, *feat, w.raw_sums);
        if (parts) parts->p = static_cast<double>(p[0]);
        total = skip_add(total, scale(p, w.lambda_p));
    }
    if (parts) parts->total = static_cast<double>(total[0]);
    return total;
}

}  // namespace hazeforge
