#pragma once

#include <array>
#include <string>
#include <vector>

#include "hazeforge/physics.hpp"
#include "hazeforge/tensor.hpp"

namespace hazeforge {

// Structural similarity with the standard 11x11 Gaussian window
// (sigma 1.5), C1 = (0.01)^2, C2 = (0.03)^2 on unit-range data, valid
// window positions only. [H,W] maps directly; [3,H,W] images average
// the per-channel scores.
double ssim(const Tensor& a, const Tensor& b);

// Dark-channel-prior baseline pieces. The dark channel is the windowed
// min over channels; transmission uses airlight-normalized intensities.
Tensor dcp_dark_channel(const Tensor& img, int window);
HazeParams dcp_atmospheric_light(const Tensor& img);
Tensor dcp_transmission(const Tensor& img, int window = 15, real omega = real(0.95));
Tensor dcp_transmission_with_light(const Tensor& img, const HazeParams& light,
                                   int window = 15, real omega = real(0.95));
Tensor dcp_dehaze(const Tensor& img, int window = 15, real omega = real(0.95),
                  real t_floor = real(0.1));

struct EvalRow {
    std::string id;
    double ssim_trans = 0;      // model transmission vs ground truth
    double ssim_image = 0;      // model dehazed vs clear
    double ssim_input_image = 0;
    double ssim_input_trans = 0;  // input luminance vs transmission
    double ssim_dcp_trans = 0;
    double ssim_dcp_image = 0;
    double ssim_target = 1.0;
    double seconds = 0;  // wall clock, reported separately from the deterministic outputs
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double mean_trans = 0;
    double mean_image = 0;
    double mean_input_image = 0;
    double mean_input_trans = 0;
    double mean_dcp_trans = 0;
    double mean_dcp_image = 0;
    double mean_target = 0;
    std::string fingerprint;
};

struct EvalOptions {
    bool write_files = true;
    bool write_sheets = true;
    bool with_dcp = true;
};

// Runs checkpoint inference over a manifest split and scores SSIM.
// manifest may be a manifest file or a directory containing
// <split>.manifest. Writes report.csv, table.txt, timings.csv and
// side-by-side sheets under out_dir.
EvalReport evaluate(const std::string& checkpoint, const std::string& manifest,
                    const std::string& split, const std::string& out_dir,
                    const EvalOptions& options = {});

}  // namespace hazeforge
