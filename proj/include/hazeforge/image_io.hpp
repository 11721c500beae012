#pragma once

#include <string>
#include <vector>

#include "hazeforge/tensor.hpp"

namespace hazeforge {

// 8-bit RGB PNG <-> [3,H,W] tensors in [0,1]. Gray and paletted inputs
// are expanded, alpha is stripped. save rounds to the nearest 8-bit level.
Tensor load_image_png(const std::string& path);
void save_image_png(const Tensor& img, const std::string& path);

// Single-channel [H,W] map in [0,1] replicated to a gray [3,H,W] image.
Tensor map_to_image(const Tensor& map01);

// Bilinear resize of an [H,W] map or [C,H,W] image.
Tensor bilinear_resize(const Tensor& src, std::size_t out_h, std::size_t out_w);

// Panels side by side with a thin white separator; all panels [3,H,W].
Tensor contact_sheet(const std::vector<Tensor>& panels);

}  // namespace hazeforge
