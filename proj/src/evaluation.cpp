#include "respwave/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "respwave/errors.hpp"

namespace respwave::eval {

namespace {

void check_contiguous(const std::vector<int>& indices) {
    if (indices.empty()) throw ValidationError("reconstruct: no segments");
    for (std::size_t i = 1; i < indices.size(); ++i)
        if (indices[i] != indices[i - 1] + 1)
            throw ValidationError("reconstruct: gap in segment indices between " +
                                  std::to_string(indices[i - 1]) + " and " +
                                  std::to_string(indices[i]));
}

}  // namespace

std::vector<double> reconstruct(const std::vector<std::vector<double>>& segments,
                                const std::vector<int>& segment_indices) {
    if (segments.size() != segment_indices.size())
        throw ValidationError("reconstruct: segment/index count mismatch");
    check_contiguous(segment_indices);
    std::vector<double> out;
    for (const auto& seg : segments) out.insert(out.end(), seg.begin(), seg.end());
    return out;
}

std::vector<double> reconstruct_denorm(const std::vector<std::vector<double>>& segments,
                                       const std::vector<int>& segment_indices,
                                       const std::vector<dsp::NormScale>& scales,
                                       dsp::Range target) {
    if (segments.size() != scales.size())
        throw ValidationError("reconstruct: segment/scale count mismatch");
    check_contiguous(segment_indices);
    std::vector<double> out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::vector<double> raw = dsp::denormalize(segments[i], scales[i], target);
        out.insert(out.end(), raw.begin(), raw.end());
    }
    return out;
}

EvalReport evaluate(const std::vector<double>& pred, const std::vector<double>& truth, double fs,
                    double window_s, const EvalConfigEcho& echo) {
    if (pred.size() != truth.size()) throw ValidationError("evaluate: length mismatch");
    const auto win = static_cast<std::size_t>(std::llround(fs * window_s));
    if (win == 0 || pred.size() < win)
        throw ValidationError("evaluate: sequence shorter than one window");

    EvalReport report;
    report.config = echo;
    report.config.window_s = window_s;
    const std::size_t n_windows = pred.size() / win;
    report.remainder_samples = static_cast<int>(pred.size() - n_windows * win);

    double err_sum = 0.0;
    for (std::size_t w = 0; w < n_windows; ++w) {
        const auto begin = static_cast<std::ptrdiff_t>(w * win);
        const std::vector<double> pw(pred.begin() + begin, pred.begin() + begin + win);
        const std::vector<double> tw(truth.begin() + begin, truth.begin() + begin + win);
        WindowScore score;
        score.window_index = static_cast<int>(w);
        const auto rr_p = dsp::estimate_rr(pw, fs);
        const auto rr_t = dsp::estimate_rr(tw, fs);
        score.rr_pred_flagged = !rr_p.has_value();
        score.rr_true_flagged = !rr_t.has_value();
        score.rr_pred = rr_p.value_or(0.0);
        score.rr_true = rr_t.value_or(0.0);
        score.abs_error = std::abs(score.rr_pred - score.rr_true);
        err_sum += score.abs_error;
        report.windows.push_back(score);
    }
    report.rr_mae = err_sum / static_cast<double>(n_windows);
    report.waveform_mae = dsp::mae(pred, truth);
    return report;
}

std::vector<std::vector<double>> sample_segments(
    const nn::ModelParams& params, const diffusion::NoiseSchedule& schedule,
    const std::vector<const dsp::SegmentPair*>& segments, diffusion::Sampler sampler, int nfe,
    std::uint64_t seed, int threads) {
    if (segments.empty()) throw ValidationError("sample_segments: no segments");
    if (sampler == diffusion::Sampler::ddpm && nfe != schedule.T)
        throw ValidationError("sample_segments: ddpm requires nfe == T (" +
                              std::to_string(schedule.T) + ")");
    const std::vector<int> steps = sampler == diffusion::Sampler::ddpm
                                       ? diffusion::full_step_grid(schedule.T)
                                       : diffusion::ddim_step_grid(schedule.T, nfe);

    const diffusion::Denoiser denoiser = [&params](const std::vector<double>& y_t, int t,
                                                   const std::vector<double>& x_ppg) {
        return nn::predict_noise(y_t, t, x_ppg, params);
    };

    std::vector<std::vector<double>> out(segments.size());
    int n = threads > 0 ? threads
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n = std::min<int>(n, static_cast<int>(segments.size()));
    const auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const std::uint64_t seg_seed =
                seed + static_cast<std::uint64_t>(segments[j]->segment_index);
            out[j] = diffusion::sample(denoiser, segments[j]->ppg, sampler, steps, seg_seed,
                                       schedule);
        }
    };
    if (n <= 1) {
        worker(0, segments.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (segments.size() + n - 1) / n;
        for (int w = 0; w < n; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(segments.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

EvalReport evaluate_subject(const nn::ModelParams& params, const train::TrainConfig& config,
                            const store::SegmentStore& store, const std::string& subject_id,
                            diffusion::Sampler sampler, int nfe, std::uint64_t seed,
                            double window_s, int threads) {
    const auto segments = store.segments_for(subject_id);
    const diffusion::NoiseSchedule schedule =
        diffusion::make_schedule(config.T, config.beta_start, config.beta_end);
    const auto sampled = sample_segments(params, schedule, segments, sampler, nfe, seed, threads);

    std::vector<int> indices;
    std::vector<std::vector<double>> truth_segs;
    for (const auto* seg : segments) {
        indices.push_back(seg->segment_index);
        truth_segs.push_back(seg->resp);
    }
    const std::vector<double> pred = reconstruct(sampled, indices);
    const std::vector<double> truth = reconstruct(truth_segs, indices);

    EvalConfigEcho echo;
    echo.sampler = diffusion::sampler_name(sampler);
    echo.nfe = nfe;
    echo.spectral_loss = config.spectral_loss_enabled;
    echo.window_s = window_s;
    EvalReport report = evaluate(pred, truth, store.options.target_fs, window_s, echo);
    report.subject_id = subject_id;
    return report;
}

std::vector<BenchmarkRow> benchmark(
    const std::vector<std::pair<std::string, std::filesystem::path>>& models,
    const store::SegmentStore& store, const std::string& subject_id, diffusion::Sampler sampler,
    const std::vector<int>& nfes, std::uint64_t seed, double window_s, int threads) {
    std::vector<BenchmarkRow> rows;
    for (const auto& [label, path] : models) {
        const auto [params, config] = train::load_checkpoint(path);
        for (const int nfe : nfes) {
            if (nfe > config.T)
                throw ValidationError("benchmark: NFE " + std::to_string(nfe) +
                                      " exceeds checkpoint schedule T = " +
                                      std::to_string(config.T));
            const EvalReport report = evaluate_subject(params, config, store, subject_id, sampler,
                                                       nfe, seed, window_s, threads);
            BenchmarkRow row;
            row.model = label;
            row.nfe = nfe;
            row.window_s = window_s;
            row.rr_mae = report.rr_mae;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string render_benchmark_table(const std::vector<BenchmarkRow>& rows) {
    std::size_t model_width = std::string("Model").size();
    for (const auto& r : rows) model_width = std::max(model_width, r.model.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(model_width + 2)) << "Model"
        << std::setw(6) << "NFE" << std::setw(14) << "Window Size"
        << "RR Error (bpm)\n";
    for (const auto& r : rows) {
        std::ostringstream window;
        window << r.window_s << "s";
        out << std::left << std::setw(static_cast<int>(model_width + 2)) << r.model
            << std::setw(6) << r.nfe << std::setw(14) << window.str() << std::fixed
            << std::setprecision(3) << r.rr_mae << "\n";
    }
    return out.str();
}

}  // namespace respwave::eval
