#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hazeforge/config.hpp"
#include "hazeforge/losses.hpp"
#include "hazeforge/manifest.hpp"
#include "hazeforge/networks.hpp"

namespace hazeforge {

struct AdamConfig {
    real lr = real(2e-3);
    real beta1 = real(0.9);
    real beta2 = real(0.999);
    real eps = real(1e-8);
};

// Per-parameter first/second moments plus the shared step counter.
struct AdamState {
    AdamConfig cfg;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long t = 0;

    void init(const std::vector<Tensor>& params);
};

// Bias-corrected update over the trainable tensors; a parameter without
// an allocated gradient counts as zero gradient. Non-finite gradients
// abort with the parameter name and flat index.
void adam_step(std::vector<Tensor>& params, AdamState& state,
               const std::vector<std::string>& names = {});

// Seed- and iteration-keyed batch composition; stateless so resumed runs
// continue the exact stream.
std::vector<std::size_t> batch_indices(std::uint64_t seed, long long iter,
                                       std::size_t n_samples, int batch_size);

struct TrainSample {
    std::string id;
    Tensor hazy;   // [3,H,W] in [0,1]
    Tensor clear;  // [3,H,W] in [0,1]
    Tensor trans;  // [H,W] in (0,1]
};

std::vector<TrainSample> load_samples(const Manifest& m, const std::string& dir);

struct LossRow {
    long long iter = 0;
    double total = 0, e = 0, a = 0, g = 0, p = 0;
};

void write_curve_csv(const std::vector<LossRow>& rows, const std::string& path);

// Trailing-window mean of the Euclidean term ending at end_iter (1-based
// row count); the convergence checks compare smoothed(200) to smoothed(window).
double smoothed_euclidean(const std::vector<LossRow>& rows, std::size_t end_iter,
                          std::size_t window = 20);

// Owns the sub-networks, optimizer state and dataset for one training
// run. Stage 1 optimizes the transmission estimator (with its GAN when
// enabled); stage 2 optimizes the joint graph.
class Trainer {
public:
    explicit Trainer(const RunConfig& cfg);
    static Trainer from_checkpoint(const std::string& path);

    void load_data(const std::string& manifest_path);
    void attach_samples(std::vector<TrainSample> samples);  // for in-memory tests

    void load_checkpoint(const std::string& path);
    void save_checkpoint(const std::string& path) const;

    LossParts stage1_step();
    LossParts stage2_step();
    std::vector<LossRow> run_stage1();
    std::vector<LossRow> run_stage2();

    // Inference in eval mode; input [3,H,W] in [0,1], any size (resized
    // internally to the generator's grid and back).
    Tensor infer_transmission(const Tensor& hazy01);
    Tensor infer_dehazed(const Tensor& hazy01, Tensor* transmission_out = nullptr);

    const RunConfig& config() const { return cfg_; }
    long long iteration() const { return iter_; }
    int stage() const { return stage_; }
    long long discriminator_updates() const { return disc_updates_; }
    bool has_generator() const { return has_gen_; }
    bool has_discriminator() const { return has_disc_; }
    std::vector<std::string> trainable_groups() const;

    NetworkState& generator();
    NetworkState& discriminator();
    NetworkState& dehazer() { return dehazer_; }
    FeatureNet& featnet() { return feat_; }
    const std::vector<TrainSample>& samples() const { return data_; }

private:
    struct Batch {
        Tensor hazy01;   // [B,3,H,W]
        Tensor hazy_sym; // [B,3,H,W] in [-1,1]
        Tensor trans;    // [B,1,H,W]
        Tensor clear;    // [B,3,H,W]
    };
    Batch make_batch(long long iter) const;
    Tensor disc_input(const Tensor& trans, const Tensor& hazy01) const;
    void update_discriminator(const Tensor& t_detached, const Tensor& t_true, const Tensor& hazy01);
    void zero_all_grads();

    RunConfig cfg_;
    LossWeights weights_;
    bool has_gen_ = false;
    bool has_disc_ = false;
    NetworkState gen_;
    NetworkState disc_;
    NetworkState dehazer_;
    FeatureNet feat_;
    AdamState adam_gen_;
    AdamState adam_disc_;
    AdamState adam_dehazer_;
    std::vector<Tensor> gen_train_;
    std::vector<std::string> gen_names_;
    std::vector<Tensor> disc_train_;
    std::vector<std::string> disc_names_;
    std::vector<Tensor> dehazer_train_;
    std::vector<std::string> dehazer_names_;
    std::vector<TrainSample> data_;
    long long iter_ = 0;
    int stage_ = 1;
    long long disc_updates_ = 0;
};

struct StageResult {
    std::string checkpoint;
    std::string curve_csv;
    std::vector<LossRow> rows;
};

// Orchestration wrappers: read the dataset named by cfg.data_dir, write
// checkpoints and loss curves under cfg.out_dir.
StageResult train_stage1(const RunConfig& cfg);
StageResult train_stage2(const RunConfig& cfg, const std::string& stage1_checkpoint);

struct AblationOutcome {
    std::string preset;
    std::string checkpoint;
    double mean_trans = 0;        // transmission SSIM vs ground truth
    double mean_image = 0;        // dehazed SSIM vs clear
    double mean_input_trans = 0;  // luminance-of-input vs transmission
    double mean_input_image = 0;  // hazy input vs clear
    double mean_target = 0;       // ground truth against itself
    double initial_smoothed_e = 0;
    double final_smoothed_e = 0;
};

// Trains all six presets with identical seed/data and scores the test
// split; writes ablation1.txt / ablation2.txt / ablation.csv under
// cfg.out_dir. A preset failure aborts the grid after flushing partial
// results.
std::vector<AblationOutcome> run_ablation_grid(const RunConfig& cfg);

struct ReferenceSsim {
    const char* column;
    double value;
};

// Scores from the full-scale configuration (2400 images at 256x256);
// desk-scale runs are smoke tests and are not expected to match these.
const std::vector<ReferenceSsim>& full_scale_reference_transmission();
const std::vector<ReferenceSsim>& full_scale_reference_image();

}  // namespace hazeforge
