#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hazeforge/tensor.hpp"

namespace hazeforge {

// Differentiable ops. Every op executes eagerly; when a Tape is active
// and any input requires grad, a backward rule is recorded. With no
// active tape the same calls run in pure inference mode.

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding);

// Weight layout [Cin, Cout, k, k]; sharing a conv weight [Co, Ci, k, k]
// makes transpose_conv2d the exact adjoint of conv2d.
Tensor transpose_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int padding);

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  Tensor running_mean, Tensor running_var, bool train,
                  real momentum = real(0.1), real eps = real(1e-5));

Tensor prelu(const Tensor& input, const Tensor& slope_per_channel);
Tensor tanh_act(const Tensor& input);
Tensor sigmoid_act(const Tensor& input);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t end);
Tensor skip_add(const Tensor& a, const Tensor& b);

// Elementwise / reduction plumbing used by the losses.
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& input, real scale, real shift);  // scale*x + shift
Tensor scale(const Tensor& input, real k);
Tensor log_eps(const Tensor& input, real eps = real(1e-8));  // ln(x + eps)
Tensor sum_all(const Tensor& input);                         // -> shape {1}
Tensor mean_all(const Tensor& input);
Tensor avg_pool2d(const Tensor& input, int window);

// Forward differences over the trailing two (spatial) dims.
Tensor diff_x(const Tensor& input);  // width shrinks by one
Tensor diff_y(const Tensor& input);  // height shrinks by one

Tensor reshape(const Tensor& input, Shape new_shape);

// --- gradient checking -------------------------------------------------

struct GradCheckReport {
    struct Entry {
        std::string param;
        double max_rel_err = 0.0;
    };
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::vector<Entry> entries;
};

// Compares tape gradients of `forward` (a scalar-valued closure over the
// given leaves) against central finite differences. Tensors up to 512
// elements are probed at every coordinate, larger ones at 64 seeded
// coordinates.
GradCheckReport gradcheck(const std::string& name,
                          std::vector<std::pair<std::string, Tensor>> inputs,
                          const std::function<Tensor()>& forward,
                          double tolerance, double h = 1e-5,
                          std::uint64_t seed = 0);

}  // namespace hazeforge
