#ifndef RESPWAVE_EVALUATION_HPP
#define RESPWAVE_EVALUATION_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "respwave/diffusion.hpp"
#include "respwave/dsp.hpp"
#include "respwave/nn.hpp"
#include "respwave/store.hpp"
#include "respwave/training.hpp"

namespace respwave::eval {

struct WindowScore {
    int window_index = 0;
    double rr_true = 0.0;
    double rr_pred = 0.0;
    double abs_error = 0.0;
    bool rr_true_flagged = false;  // no dominant frequency in the window
    bool rr_pred_flagged = false;
};

struct EvalConfigEcho {
    std::string sampler = "ddim";
    int nfe = 0;
    bool spectral_loss = false;
    double window_s = 60.0;
};

struct EvalReport {
    std::string subject_id;
    std::vector<WindowScore> windows;
    double rr_mae = 0.0;        // bpm, mean of per-window absolute errors
    double waveform_mae = 0.0;  // normalized units over the full sequences
    int remainder_samples = 0;  // trailing samples not covered by a window
    EvalConfigEcho config;
};

// Plain concatenation of sampled segments in the normalized domain; the
// indices must be contiguous and ascending.
std::vector<double> reconstruct(const std::vector<std::vector<double>>& segments,
                                const std::vector<int>& segment_indices);

// As above, de-normalized with the stored scales (for waveform plots).
std::vector<double> reconstruct_denorm(const std::vector<std::vector<double>>& segments,
                                       const std::vector<int>& segment_indices,
                                       const std::vector<dsp::NormScale>& scales,
                                       dsp::Range target);

// Non-overlapping windows of window_s seconds, estimate_rr per window on both
// sequences; rr_mae is the mean absolute bpm error and waveform_mae the MAE
// over the full normalized sequences. A window without a dominant frequency
// is flagged and scored as rate 0.
EvalReport evaluate(const std::vector<double>& pred, const std::vector<double>& truth, double fs,
                    double window_s, const EvalConfigEcho& echo = {});

// Draws one waveform per conditioning segment with the model denoiser.
// Per-segment seeds are seed + segment_index, so parallel sampling is
// deterministic. Returns segments in segment_index order.
std::vector<std::vector<double>> sample_segments(
    const nn::ModelParams& params, const diffusion::NoiseSchedule& schedule,
    const std::vector<const dsp::SegmentPair*>& segments, diffusion::Sampler sampler, int nfe,
    std::uint64_t seed, int threads = 0);

// Full held-out evaluation for one checkpointed model.
EvalReport evaluate_subject(const nn::ModelParams& params, const train::TrainConfig& config,
                            const store::SegmentStore& store, const std::string& subject_id,
                            diffusion::Sampler sampler, int nfe, std::uint64_t seed,
                            double window_s = 60.0, int threads = 0);

struct BenchmarkRow {
    std::string model;
    int nfe = 0;
    double window_s = 60.0;
    double rr_mae = 0.0;
};

// Rows computed by sampling + evaluating each (checkpoint, NFE) combination
// on the held-out subject with the given sampler.
std::vector<BenchmarkRow> benchmark(
    const std::vector<std::pair<std::string, std::filesystem::path>>& models,
    const store::SegmentStore& store, const std::string& subject_id, diffusion::Sampler sampler,
    const std::vector<int>& nfes, std::uint64_t seed, double window_s = 60.0, int threads = 0);

// Aligned Model/NFE/Window/RR-Error text table.
std::string render_benchmark_table(const std::vector<BenchmarkRow>& rows);

}  // namespace respwave::eval

#endif
