#ifndef RESPWAVE_TRAINING_HPP
#define RESPWAVE_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "respwave/diffusion.hpp"
#include "respwave/dsp.hpp"
#include "respwave/nn.hpp"

namespace respwave::train {

struct TrainConfig {
    // diffusion schedule
    int T = 50;
    double beta_start = 1e-4;
    double beta_end = 0.05;
    // composite loss
    double lambda_spec = 0.01;
    bool spectral_loss_enabled = true;
    bool clip_x0 = false;  // clamp the single-step estimate to [-1, 1] before the spectral term
    // model
    nn::ModelConfig model;
    // optimizer
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    int epochs = 20;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency

    double effective_lambda_spec() const { return spectral_loss_enabled ? lambda_spec : 0.0; }
    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double diff_loss = 0.0;
    double spec_loss = 0.0;
    double total_loss = 0.0;
    double seconds = 0.0;
};

struct TrainRecord {
    std::uint64_t seed = 0;
    std::vector<EpochStats> epochs;
};

// Mean of squared residuals over elements.
double diffusion_loss(const std::vector<double>& eps, const std::vector<double>& eps_hat);

// Mean over the one-sided frequency bins of squared DFT-magnitude differences.
double spectral_loss(const std::vector<double>& y0_hat, const std::vector<double>& y0);

// Pre-assigned per-example randomness: diffusion step and injected noise.
struct ExampleDraw {
    int t = 1;
    std::vector<double> eps;
};

struct LossResult {
    double total = 0.0;
    double diff = 0.0;
    double spec = 0.0;
};

// Composite loss and gradients over a batch. Gradients are accumulated into
// grad in example order regardless of thread count, so results are identical
// for any parallelism level.
LossResult total_loss(const std::vector<const dsp::SegmentPair*>& batch,
                      const std::vector<ExampleDraw>& draws, const nn::ModelParams& params,
                      const diffusion::NoiseSchedule& schedule, const TrainConfig& config,
                      std::vector<double>& grad, int threads = 1);

// Convenience overload that draws t ~ U{1..T} and eps ~ N(0, I) per example
// from rng (t first, then the noise vector, in batch order).
LossResult total_loss(const std::vector<const dsp::SegmentPair*>& batch,
                      const nn::ModelParams& params, const diffusion::NoiseSchedule& schedule,
                      const TrainConfig& config, std::mt19937_64& rng, std::vector<double>& grad,
                      int threads = 1);

class AdamOptimizer {
  public:
    AdamOptimizer(std::size_t size, double lr, double beta1, double beta2, double eps);
    void step(std::vector<double>& params, const std::vector<double>& grad);

  private:
    double lr_, beta1_, beta2_, eps_;
    long steps_ = 0;
    std::vector<double> m_, v_;
};

// Shuffled mini-batch training. Per-epoch draw order from one seeded
// generator: index shuffle, then per example (batch order) the step t and the
// noise vector. Emits per-epoch checkpoints and a JSONL log when out_dir is
// set. The returned parameters are quantized to the checkpoint's 32-bit
// storage so in-process sampling matches a later load exactly.
std::pair<nn::ModelParams, TrainRecord> train(
    const std::vector<dsp::SegmentPair>& dataset, const TrainConfig& config,
    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Binary checkpoint: magic "RDF1", JSON metadata block (model dimensions,
// kernel lists, schedule, training configuration, format version), then the
// flat parameter array as little-endian 32-bit floats in declared order.
void save_checkpoint(const nn::ModelParams& params, const TrainConfig& config,
                     const std::filesystem::path& path);
std::pair<nn::ModelParams, TrainConfig> load_checkpoint(const std::filesystem::path& path);

}  // namespace respwave::train

#endif
