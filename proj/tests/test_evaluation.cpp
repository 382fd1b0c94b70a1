#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "respwave/errors.hpp"
#include "respwave/evaluation.hpp"

using namespace respwave;
namespace fs = std::filesystem;

namespace {

std::vector<double> sinusoid(double freq_hz, double fs, std::size_t n, double amp = 1.0) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / fs);
    return out;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("respwave_eval_test_" +
                                                  std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("reconstruct concatenates contiguous segments") {
    std::vector<std::vector<double>> segs(96, std::vector<double>(150, 0.5));
    std::vector<int> indices(96);
    for (int i = 0; i < 96; ++i) indices[static_cast<std::size_t>(i)] = i;
    CHECK(eval::reconstruct(segs, indices).size() == 14400);

    const std::vector<std::vector<double>> one{{1.0, 2.0}};
    CHECK(eval::reconstruct(one, {4}) == std::vector<double>{1.0, 2.0});

    std::vector<int> gap = indices;
    gap.erase(gap.begin() + 5);
    segs.pop_back();
    try {
        eval::reconstruct(segs, gap);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("4") != std::string::npos);
        CHECK(std::string(e.what()).find("6") != std::string::npos);
    }
}

TEST_CASE("reconstruct_denorm applies stored scales") {
    const std::vector<std::vector<double>> segs{{-1.0, 0.0, 1.0}, {-1.0, 1.0, -1.0}};
    const std::vector<dsp::NormScale> scales{{2.0, 4.0, false}, {10.0, 2.0, false}};
    const auto out = eval::reconstruct_denorm(segs, {0, 1}, scales, dsp::kRespRange);
    CHECK(out == std::vector<double>{2.0, 4.0, 6.0, 10.0, 12.0, 10.0});
}

TEST_CASE("evaluate: identity, constant bpm offset, noise robustness") {
    const double fs = 30.0;
    const std::size_t n = 8 * 1800;  // 8 minutes

    const auto truth = sinusoid(15.0 / 60.0, fs, n);
    const auto r0 = eval::evaluate(truth, truth, fs, 60.0);
    CHECK(r0.rr_mae == 0.0);
    CHECK(r0.waveform_mae == 0.0);
    CHECK(r0.windows.size() == 8);

    const auto pred18 = sinusoid(18.0 / 60.0, fs, n);
    const auto r1 = eval::evaluate(pred18, truth, fs, 60.0);
    CHECK(r1.rr_mae == doctest::Approx(3.0).epsilon(1e-12));
    for (const auto& w : r1.windows) {
        CHECK(w.rr_true == doctest::Approx(15.0));
        CHECK(w.rr_pred == doctest::Approx(18.0));
    }

    // uniform noise of amplitude 0.05: rr unchanged, waveform_mae ~ 0.025
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    auto noisy = truth;
    for (double& v : noisy) v += noise(rng);
    const auto r2 = eval::evaluate(noisy, truth, fs, 60.0);
    CHECK(r2.rr_mae == 0.0);
    CHECK(r2.waveform_mae == doctest::Approx(0.025).epsilon(0.10));
}

TEST_CASE("evaluate: remainder reporting and validation") {
    const double fs = 30.0;
    const auto truth = sinusoid(0.25, fs, 1800 + 450);
    const auto r = eval::evaluate(truth, truth, fs, 60.0);
    CHECK(r.windows.size() == 1);
    CHECK(r.remainder_samples == 450);

    CHECK_THROWS_AS(eval::evaluate(truth, sinusoid(0.25, fs, 100), fs, 60.0), ValidationError);
    CHECK_THROWS_AS(eval::evaluate(sinusoid(0.25, fs, 100), sinusoid(0.25, fs, 100), fs, 60.0),
                    ValidationError);
}

TEST_CASE("evaluate invariances and self-consistency (property)") {
    const double fs = 30.0;
    const std::size_t n = 4 * 1800;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    std::vector<double> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        truth[i] = std::sin(2.0 * M_PI * 0.2 * t) + 0.1 * dist(rng);
        pred[i] = std::sin(2.0 * M_PI * 0.25 * t) + 0.1 * dist(rng);
    }
    const auto base = eval::evaluate(pred, truth, fs, 60.0);

    std::vector<double> pred_scaled(pred), truth_scaled(truth);
    for (double& v : pred_scaled) v *= 7.5;
    for (double& v : truth_scaled) v *= 7.5;
    const auto scaled = eval::evaluate(pred_scaled, truth_scaled, fs, 60.0);
    CHECK(scaled.rr_mae == base.rr_mae);  // argmax invariance

    double recomputed = 0.0;
    for (const auto& w : base.windows) recomputed += w.abs_error;
    recomputed /= static_cast<double>(base.windows.size());
    CHECK(base.rr_mae == doctest::Approx(recomputed).epsilon(1e-12));

    CHECK(eval::evaluate(pred, truth, fs, 60.0).rr_mae == base.rr_mae);  // purity
}

TEST_CASE("sample_segments: deterministic and thread-count independent") {
    // small synthetic store + fresh model
    std::vector<io::Recording> recs;
    io::SyntheticConfig cfg;
    cfg.rr_bpm = 15.0;
    cfg.duration_s = 30.0;
    cfg.baseline_depth = 0.3;
    recs.push_back(io::generate_synthetic(cfg, 1, "a"));
    const auto st = store::ingest(recs, store::IngestOptions{});
    const auto segs = st.segments_for("a");

    train::TrainConfig tc;
    tc.T = 6;
    tc.model.fine_kernels = {1, 3};
    tc.model.coarse_kernels = {3};
    tc.model.coarse_dilation = 2;
    tc.model.branch_channels = 2;
    tc.model.hidden = 3;
    tc.model.time_embed_dim = 4;
    const auto params = nn::ModelParams::init(tc.model, 9);
    const auto schedule = diffusion::make_schedule(tc.T, tc.beta_start, tc.beta_end);

    const auto a = eval::sample_segments(params, schedule, segs, diffusion::Sampler::ddim, 3, 7, 1);
    const auto b = eval::sample_segments(params, schedule, segs, diffusion::Sampler::ddim, 3, 7, 4);
    CHECK(a == b);
    const auto c = eval::sample_segments(params, schedule, segs, diffusion::Sampler::ddim, 3, 8, 1);
    CHECK(a != c);

    CHECK_THROWS_AS(
        eval::sample_segments(params, schedule, segs, diffusion::Sampler::ddpm, 3, 7, 1),
        ValidationError);
    const auto d =
        eval::sample_segments(params, schedule, segs, diffusion::Sampler::ddpm, tc.T, 7, 1);
    CHECK(d.size() == segs.size());
}

TEST_CASE("benchmark: row structure, empty models, determinism") {
    std::vector<io::Recording> recs;
    for (int i = 0; i < 2; ++i) {
        io::SyntheticConfig cfg;
        cfg.rr_bpm = 12.0 + 6.0 * i;
        cfg.duration_s = 120.0;
        cfg.baseline_depth = 0.3;
        cfg.noise_std = 0.02;
        recs.push_back(io::generate_synthetic(cfg, 10 + i, "s" + std::to_string(i)));
    }
    const auto st = store::ingest(recs, store::IngestOptions{});

    train::TrainConfig tc;
    tc.T = 8;
    tc.model.fine_kernels = {1, 3};
    tc.model.coarse_kernels = {3};
    tc.model.coarse_dilation = 2;
    tc.model.branch_channels = 2;
    tc.model.hidden = 3;
    tc.model.time_embed_dim = 4;
    tc.batch_size = 4;
    tc.epochs = 1;
    tc.threads = 1;

    TempDir tmp;
    const auto dataset = st.training_set_excluding("s1");
    auto tc_off = tc;
    tc_off.spectral_loss_enabled = false;
    const auto [p_on, r_on] = train::train(dataset, tc);
    const auto [p_off, r_off] = train::train(dataset, tc_off);
    train::save_checkpoint(p_on, tc, tmp.path / "on.rdf");
    train::save_checkpoint(p_off, tc_off, tmp.path / "off.rdf");

    const std::vector<std::pair<std::string, fs::path>> models{
        {"with spectral loss", tmp.path / "on.rdf"},
        {"w/o spectral loss", tmp.path / "off.rdf"}};
    const auto rows =
        eval::benchmark(models, st, "s1", diffusion::Sampler::ddim, {8, 4}, 3, 60.0, 1);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].model == "with spectral loss");
    CHECK(rows[0].nfe == 8);
    CHECK(rows[1].nfe == 4);
    CHECK(rows[2].model == "w/o spectral loss");

    const auto rows2 =
        eval::benchmark(models, st, "s1", diffusion::Sampler::ddim, {8, 4}, 3, 60.0, 2);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].rr_mae == rows2[i].rr_mae);

    CHECK(eval::benchmark({}, st, "s1", diffusion::Sampler::ddim, {8}, 3).empty());
    CHECK_THROWS_AS(eval::benchmark(models, st, "s1", diffusion::Sampler::ddim, {100}, 3),
                    ValidationError);

    const auto table = eval::render_benchmark_table(rows);
    CHECK(table.find("Model") != std::string::npos);
    CHECK(table.find("NFE") != std::string::npos);
    CHECK(table.find("RR Error (bpm)") != std::string::npos);
    CHECK(table.find("w/o spectral loss") != std::string::npos);

    const auto header_only = eval::render_benchmark_table({});
    CHECK(header_only.find("Model") != std::string::npos);
}
