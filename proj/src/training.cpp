#include "respwave/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "respwave/errors.hpp"

namespace respwave::train {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'R', 'D', 'F', '1'};
constexpr int kCheckpointVersion = 1;

int resolve_threads(int requested, std::size_t work_items) {
    int n = requested > 0 ? requested
                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n = std::min<int>(n, static_cast<int>(work_items));
    return std::max(n, 1);
}

// Loss terms and parameter gradient for a single example. The upstream batch
// scale 1/B is folded in so buffers can simply be summed.
void example_pass(const dsp::SegmentPair& seg, const ExampleDraw& draw,
                  const nn::ModelParams& params, const diffusion::NoiseSchedule& schedule,
                  const TrainConfig& config, double inv_batch, double& diff_out, double& spec_out,
                  std::vector<double>& grad) {
    const std::size_t L = seg.resp.size();
    const std::vector<double> y_t = diffusion::forward_diffuse(seg.resp, draw.t, draw.eps, schedule);

    nn::ForwardCache cache;
    const std::vector<double> eps_hat = nn::predict_noise(y_t, draw.t, seg.ppg, params, &cache);

    diff_out = diffusion_loss(draw.eps, eps_hat);

    std::vector<double> d_eps(L);
    const double diff_scale = 2.0 / (static_cast<double>(L)) * inv_batch;
    for (std::size_t i = 0; i < L; ++i) d_eps[i] = diff_scale * (eps_hat[i] - draw.eps[i]);

    spec_out = 0.0;
    const double lambda = config.effective_lambda_spec();
    if (lambda != 0.0) {
        std::vector<double> y0_hat = diffusion::estimate_x0(y_t, draw.t, eps_hat, schedule);
        std::vector<double> clip_mask;
        if (config.clip_x0) {
            clip_mask.assign(L, 1.0);
            for (std::size_t i = 0; i < L; ++i) {
                if (y0_hat[i] > 1.0) {
                    y0_hat[i] = 1.0;
                    clip_mask[i] = 0.0;
                } else if (y0_hat[i] < -1.0) {
                    y0_hat[i] = -1.0;
                    clip_mask[i] = 0.0;
                }
            }
        }
        const dsp::DftSpectrum pred = dsp::dft_real(y0_hat);
        const dsp::DftSpectrum truth = dsp::dft_real(seg.resp);
        const std::size_t bins = pred.re.size();
        spec_out = 0.0;
        std::vector<double> g_re(bins, 0.0), g_im(bins, 0.0);
        for (std::size_t k = 0; k < bins; ++k) {
            const double mag_pred = std::hypot(pred.re[k], pred.im[k]);
            const double mag_true = std::hypot(truth.re[k], truth.im[k]);
            const double delta = mag_pred - mag_true;
            spec_out += delta * delta;
            if (mag_pred > 0.0) {
                const double s = 2.0 / static_cast<double>(bins) * delta / mag_pred;
                g_re[k] = s * pred.re[k];
                g_im[k] = s * pred.im[k];
            }
        }
        spec_out /= static_cast<double>(bins);

        std::vector<double> d_y0 = dsp::dft_real_adjoint(g_re, g_im, static_cast<int>(L));
        // d y0_hat / d eps_hat = -sqrt(1 - abar_t) / sqrt(abar_t)
        const double abar = schedule.alpha_bar(draw.t);
        const double chain = -std::sqrt(1.0 - abar) / std::sqrt(abar) * lambda * inv_batch;
        if (config.clip_x0) {
            for (std::size_t i = 0; i < L; ++i) d_eps[i] += chain * d_y0[i] * clip_mask[i];
        } else {
            for (std::size_t i = 0; i < L; ++i) d_eps[i] += chain * d_y0[i];
        }
    }

    nn::backward(d_eps, cache, params, grad);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void TrainConfig::validate() const {
    if (T < 1) throw ValidationError("train config: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
        throw ValidationError("train config: need 0 < beta_start < beta_end < 1");
    if (lambda_spec < 0.0) throw ValidationError("train config: lambda_spec must be >= 0");
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("train config: learning_rate must be > 0");
    model.validate();
}

double diffusion_loss(const std::vector<double>& eps, const std::vector<double>& eps_hat) {
    if (eps.empty() || eps.size() != eps_hat.size())
        throw ValidationError("diffusion_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double d = eps[i] - eps_hat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

double spectral_loss(const std::vector<double>& y0_hat, const std::vector<double>& y0) {
    if (y0_hat.empty() || y0_hat.size() != y0.size())
        throw ValidationError("spectral_loss: length mismatch");
    const dsp::SpectrumMagnitude a = dsp::fft_magnitude(y0_hat, 1.0);
    const dsp::SpectrumMagnitude b = dsp::fft_magnitude(y0, 1.0);
    double acc = 0.0;
    for (int k = 0; k < a.n_bins(); ++k) {
        const double d = a.bins[k] - b.bins[k];
        acc += d * d;
    }
    return acc / static_cast<double>(a.n_bins());
}

LossResult total_loss(const std::vector<const dsp::SegmentPair*>& batch,
                      const std::vector<ExampleDraw>& draws, const nn::ModelParams& params,
                      const diffusion::NoiseSchedule& schedule, const TrainConfig& config,
                      std::vector<double>& grad, int threads) {
    if (batch.empty()) throw ValidationError("total_loss: empty batch");
    if (batch.size() != draws.size())
        throw ValidationError("total_loss: draw count does not match batch size");
    if (grad.size() != params.size()) grad.assign(params.size(), 0.0);

    const std::size_t B = batch.size();
    const double inv_batch = 1.0 / static_cast<double>(B);
    std::vector<std::vector<double>> example_grads(B);
    std::vector<double> diffs(B, 0.0), specs(B, 0.0);

    const int n_threads = resolve_threads(threads, B);
    const auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            example_grads[j].assign(params.size(), 0.0);
            example_pass(*batch[j], draws[j], params, schedule, config, inv_batch, diffs[j],
                         specs[j], example_grads[j]);
        }
    };
    if (n_threads == 1) {
        worker(0, B);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (B + n_threads - 1) / n_threads;
        for (int w = 0; w < n_threads; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(B, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    // fixed reduction order: example 0, 1, ... regardless of thread count
    LossResult result;
    for (std::size_t j = 0; j < B; ++j) {
        result.diff += diffs[j] * inv_batch;
        result.spec += specs[j] * inv_batch;
        const std::vector<double>& eg = example_grads[j];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += eg[i];
    }
    result.total = result.diff + config.effective_lambda_spec() * result.spec;
    return result;
}

LossResult total_loss(const std::vector<const dsp::SegmentPair*>& batch,
                      const nn::ModelParams& params, const diffusion::NoiseSchedule& schedule,
                      const TrainConfig& config, std::mt19937_64& rng, std::vector<double>& grad,
                      int threads) {
    std::uniform_int_distribution<int> t_dist(1, schedule.T);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ExampleDraw> draws(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        draws[j].t = t_dist(rng);
        draws[j].eps.resize(batch[j]->resp.size());
        for (double& v : draws[j].eps) v = gauss(rng);
    }
    return total_loss(batch, draws, params, schedule, config, grad, threads);
}

AdamOptimizer::AdamOptimizer(std::size_t size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw ValidationError("adam: size mismatch");
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

namespace {

json config_to_json(const TrainConfig& c) {
    return json{
        {"format_version", kCheckpointVersion},
        {"model",
         {{"fine_kernels", c.model.fine_kernels},
          {"coarse_kernels", c.model.coarse_kernels},
          {"coarse_dilation", c.model.coarse_dilation},
          {"branch_channels", c.model.branch_channels},
          {"hidden", c.model.hidden},
          {"time_embed_dim", c.model.time_embed_dim},
          {"lambda_ppg", c.model.lambda_ppg}}},
        {"schedule", {{"T", c.T}, {"beta_start", c.beta_start}, {"beta_end", c.beta_end}}},
        {"train",
         {{"lambda_spec", c.lambda_spec},
          {"spectral_loss_enabled", c.spectral_loss_enabled},
          {"clip_x0", c.clip_x0},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed}}}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    const json& m = j.at("model");
    c.model.fine_kernels = m.at("fine_kernels").get<std::vector<int>>();
    c.model.coarse_kernels = m.at("coarse_kernels").get<std::vector<int>>();
    c.model.coarse_dilation = m.at("coarse_dilation").get<int>();
    c.model.branch_channels = m.at("branch_channels").get<int>();
    c.model.hidden = m.at("hidden").get<int>();
    c.model.time_embed_dim = m.at("time_embed_dim").get<int>();
    c.model.lambda_ppg = m.at("lambda_ppg").get<double>();
    const json& s = j.at("schedule");
    c.T = s.at("T").get<int>();
    c.beta_start = s.at("beta_start").get<double>();
    c.beta_end = s.at("beta_end").get<double>();
    const json& t = j.at("train");
    c.lambda_spec = t.at("lambda_spec").get<double>();
    c.spectral_loss_enabled = t.at("spectral_loss_enabled").get<bool>();
    c.clip_x0 = t.at("clip_x0").get<bool>();
    c.learning_rate = t.at("learning_rate").get<double>();
    c.adam_beta1 = t.at("adam_beta1").get<double>();
    c.adam_beta2 = t.at("adam_beta2").get<double>();
    c.adam_eps = t.at("adam_eps").get<double>();
    c.batch_size = t.at("batch_size").get<int>();
    c.epochs = t.at("epochs").get<int>();
    c.seed = t.at("seed").get<std::uint64_t>();
    return c;
}

void quantize_to_f32(std::vector<double>& values) {
    for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

void save_checkpoint(const nn::ModelParams& params, const TrainConfig& config,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    out.write(kMagic, 4);
    const std::string meta = config_to_json(config).dump();
    write_u32(out, static_cast<std::uint32_t>(meta.size()));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    const std::uint64_t count = params.size();
    write_u32(out, static_cast<std::uint32_t>(count & 0xffffffffULL));
    write_u32(out, static_cast<std::uint32_t>(count >> 32));
    for (const double v : params.flat()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
    if (!out) throw IoError("checkpoint write failed: " + path.string());
}

std::pair<nn::ModelParams, TrainConfig> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(path.string() + ": not a checkpoint (bad magic)");
    const std::uint32_t meta_len = read_u32(in);
    std::string meta(meta_len, '\0');
    in.read(meta.data(), meta_len);
    if (!in) throw IoError(path.string() + ": truncated checkpoint metadata");
    json doc;
    try {
        doc = json::parse(meta);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": corrupt checkpoint metadata: " + e.what());
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointVersion)
        throw IoError(path.string() + ": checkpoint format_version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    TrainConfig config;
    try {
        config = config_from_json(doc);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": incomplete checkpoint metadata: " + e.what());
    }
    nn::ModelParams params(config.model);
    const std::uint64_t lo = read_u32(in);
    const std::uint64_t hi = read_u32(in);
    const std::uint64_t count = lo | (hi << 32);
    if (!in || count != params.size())
        throw IoError(path.string() + ": parameter count does not match model dimensions");
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = read_u32(in);
        if (!in) throw IoError(path.string() + ": truncated parameter data");
        float f;
        std::memcpy(&f, &bits, 4);
        params.flat()[i] = static_cast<double>(f);
    }
    return {std::move(params), config};
}

std::pair<nn::ModelParams, TrainRecord> train(
    const std::vector<dsp::SegmentPair>& dataset, const TrainConfig& config,
    const std::optional<std::filesystem::path>& out_dir) {
    config.validate();
    if (dataset.empty()) throw ValidationError("train: empty dataset");
    const diffusion::NoiseSchedule schedule =
        diffusion::make_schedule(config.T, config.beta_start, config.beta_end);
    nn::ModelParams params = nn::ModelParams::init(config.model, config.seed);

    AdamOptimizer opt(params.size(), config.learning_rate, config.adam_beta1, config.adam_beta2,
                      config.adam_eps);
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<int> t_dist(1, config.T);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::ofstream log;
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        log.open(*out_dir / "training_log.jsonl", std::ios::trunc);
        if (!log) throw IoError("cannot write training log in " + out_dir->string());
    }

    TrainRecord record;
    record.seed = config.seed;
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> grad(params.size(), 0.0);
    const int threads = resolve_threads(config.threads, static_cast<std::size_t>(config.batch_size));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double sum_diff = 0.0, sum_spec = 0.0, sum_total = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            std::vector<const dsp::SegmentPair*> batch;
            std::vector<ExampleDraw> draws;
            batch.reserve(end - begin);
            draws.reserve(end - begin);
            for (std::size_t j = begin; j < end; ++j) {
                const dsp::SegmentPair& seg = dataset[order[j]];
                batch.push_back(&seg);
                ExampleDraw draw;
                draw.t = t_dist(rng);
                draw.eps.resize(seg.resp.size());
                for (double& v : draw.eps) v = gauss(rng);
                draws.push_back(std::move(draw));
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            const LossResult loss =
                total_loss(batch, draws, params, schedule, config, grad, threads);
            if (!std::isfinite(loss.total)) {
                std::ostringstream diag;
                diag << "train: non-finite loss at epoch " << epoch << " batch " << batches
                     << "; example indices [";
                for (std::size_t j = begin; j < end; ++j)
                    diag << order[j] << (j + 1 < end ? "," : "");
                diag << "]; t values [";
                for (std::size_t j = 0; j < draws.size(); ++j)
                    diag << draws[j].t << (j + 1 < draws.size() ? "," : "");
                diag << "]";
                throw NumericalError(diag.str());
            }
            opt.step(params.flat(), grad);
            sum_diff += loss.diff;
            sum_spec += loss.spec;
            sum_total += loss.total;
            ++batches;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        EpochStats stats;
        stats.epoch = epoch;
        stats.diff_loss = sum_diff / static_cast<double>(batches);
        stats.spec_loss = sum_spec / static_cast<double>(batches);
        stats.total_loss = sum_total / static_cast<double>(batches);
        stats.seconds = seconds;
        record.epochs.push_back(stats);
        if (out_dir) {
            char name[32];
            std::snprintf(name, sizeof(name), "ckpt_epoch_%03d.rdf", epoch);
            save_checkpoint(params, config, *out_dir / name);
            log << json{{"epoch", epoch},
                        {"diff_loss", stats.diff_loss},
                        {"spec_loss", stats.spec_loss},
                        {"total_loss", stats.total_loss},
                        {"seconds", stats.seconds}}
                       .dump()
                << "\n";
            log.flush();
        }
    }

    // Match the 32-bit checkpoint storage so sampling with the returned
    // parameters equals sampling after a reload.
    quantize_to_f32(params.flat());
    if (out_dir) save_checkpoint(params, config, *out_dir / "final.rdf");
    return {std::move(params), std::move(record)};
}

}  // namespace respwave::train
