// respwave: conditional-diffusion respiratory waveform estimation from PPG.
// Subcommands: ingest, train, sample, eval, plot, benchmark.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "respwave/errors.hpp"
#include "respwave/evaluation.hpp"
#include "respwave/signal_io.hpp"
#include "respwave/store.hpp"
#include "respwave/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace respwave;

namespace {

// Single-writer guard for an output directory.
class DirLock {
  public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".respwave.lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw IoError("output directory is locked by another run: " + path_.string());
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

  private:
    fs::path path_;
    int fd_ = -1;
};

fs::path default_out(const std::string& subcommand) {
    if (const char* root = std::getenv("RESPWAVE_OUT_ROOT"))
        return fs::path(root) / subcommand;
    return fs::path("respwave_out") / subcommand;
}

void write_config_echo(const fs::path& out_dir, const json& resolved) {
    std::ofstream out(out_dir / "run_config.json", std::ios::trunc);
    if (!out) throw IoError("cannot write config echo in " + out_dir.string());
    out << resolved.dump(2) << "\n";
}

json model_to_json(const nn::ModelConfig& m) {
    return json{{"fine_kernels", m.fine_kernels},
                {"coarse_kernels", m.coarse_kernels},
                {"coarse_dilation", m.coarse_dilation},
                {"branch_channels", m.branch_channels},
                {"hidden", m.hidden},
                {"time_embed_dim", m.time_embed_dim},
                {"lambda_ppg", m.lambda_ppg}};
}

json train_to_json(const train::TrainConfig& c) {
    return json{{"T", c.T},
                {"beta_start", c.beta_start},
                {"beta_end", c.beta_end},
                {"lambda_spec", c.lambda_spec},
                {"spectral_loss_enabled", c.spectral_loss_enabled},
                {"clip_x0", c.clip_x0},
                {"learning_rate", c.learning_rate},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"adam_eps", c.adam_eps},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"seed", c.seed},
                {"threads", c.threads},
                {"model", model_to_json(c.model)}};
}

// Synthetic dataset description: global defaults plus per-subject overrides.
std::vector<io::Recording> load_synthetic_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synthetic config: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError("synthetic config parse error: " + std::string(e.what()));
    }
    if (doc.value("format_version", 0) != 1)
        throw ValidationError("synthetic config: format_version 1 required");

    const json defaults = doc.value("defaults", json::object());
    const auto field = [&](const json& subject, const std::string& key, double fallback) {
        if (subject.contains(key)) return subject.at(key).get<double>();
        if (defaults.contains(key)) return defaults.at(key).get<double>();
        return fallback;
    };
    const auto seed_base = doc.value("seed", 0ULL);

    std::vector<io::Recording> recordings;
    std::uint64_t index = 0;
    for (const json& subject : doc.at("subjects")) {
        io::SyntheticConfig cfg;
        cfg.rr_bpm = field(subject, "rr_bpm", cfg.rr_bpm);
        cfg.hr_bpm = field(subject, "hr_bpm", cfg.hr_bpm);
        cfg.am_depth = field(subject, "am_depth", cfg.am_depth);
        cfg.fm_depth = field(subject, "fm_depth", cfg.fm_depth);
        cfg.baseline_depth = field(subject, "baseline_depth", cfg.baseline_depth);
        cfg.noise_std = field(subject, "noise_std", cfg.noise_std);
        cfg.duration_s = field(subject, "duration_s", cfg.duration_s);
        cfg.fs = field(subject, "fs", cfg.fs);
        const std::string id = subject.at("subject_id").get<std::string>();
        recordings.push_back(io::generate_synthetic(cfg, seed_base + index, id));
        ++index;
    }
    if (recordings.empty()) throw ValidationError("synthetic config: no subjects");
    return recordings;
}

void write_waveform_tsv(const fs::path& path, const std::vector<double>& pred,
                        const std::vector<double>* truth, double fs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "time_s\tpred";
    if (truth) out << "\ttruth";
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        out << static_cast<double>(i) / fs << "\t" << pred[i];
        if (truth) out << "\t" << (*truth)[i];
        out << "\n";
    }
}

// One value per line; a leading non-numeric header line and leading columns
// (time stamps) are tolerated -- the last field of each row is used.
std::vector<double> read_waveform_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open waveform file: " + path.string());
    std::vector<double> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto pos = line.find_last_of(",\t ");
        const std::string cell = pos == std::string::npos ? line : line.substr(pos + 1);
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw IoError(path.string() + ": non-numeric value '" + cell + "'");
        }
        first = false;
    }
    if (out.empty()) throw IoError(path.string() + ": no samples");
    return out;
}

json report_to_json(const eval::EvalReport& r) {
    json windows = json::array();
    for (const auto& w : r.windows)
        windows.push_back(json{{"window_index", w.window_index},
                               {"rr_true_bpm", w.rr_true},
                               {"rr_pred_bpm", w.rr_pred},
                               {"abs_error_bpm", w.abs_error},
                               {"rr_true_flagged", w.rr_true_flagged},
                               {"rr_pred_flagged", w.rr_pred_flagged}});
    return json{{"subject_id", r.subject_id},
                {"rr_mae_bpm", r.rr_mae},
                {"waveform_mae_normalized", r.waveform_mae},
                {"waveform_units", "normalized [-1, 1]"},
                {"remainder_samples", r.remainder_samples},
                {"config",
                 {{"sampler", r.config.sampler},
                  {"nfe", r.config.nfe},
                  {"spectral_loss", r.config.spectral_loss},
                  {"window_s", r.config.window_s}}},
                {"windows", windows}};
}

void write_report(const fs::path& out_dir, const eval::EvalReport& report) {
    std::ofstream js(out_dir / "report.json", std::ios::trunc);
    if (!js) throw IoError("cannot write report.json in " + out_dir.string());
    js << report_to_json(report).dump(2) << "\n";

    std::ofstream txt(out_dir / "report.txt", std::ios::trunc);
    txt << "subject: " << report.subject_id << "\n"
        << "sampler: " << report.config.sampler << "  NFE: " << report.config.nfe
        << "  spectral_loss: " << (report.config.spectral_loss ? "on" : "off")
        << "  window: " << report.config.window_s << "s\n"
        << "waveform MAE (normalized [-1,1] domain): " << report.waveform_mae << "\n"
        << "RR MAE (bpm): " << report.rr_mae << "\n"
        << "windows (" << report.windows.size() << ", remainder " << report.remainder_samples
        << " samples):\n"
        << "  idx  rr_true  rr_pred  abs_err\n";
    for (const auto& w : report.windows) {
        char line[128];
        std::snprintf(line, sizeof(line), "  %3d  %7.3f  %7.3f  %7.3f%s\n", w.window_index,
                      w.rr_true, w.rr_pred, w.abs_error,
                      (w.rr_pred_flagged || w.rr_true_flagged) ? "  [flagged]" : "");
        txt << line;
    }
}

struct CommonTrainFlags {
    train::TrainConfig config;
    std::vector<int> kernels;         // --kernels override
    std::vector<int> coarse_kernels;  // --coarse-kernels override
    bool no_spectral = false;

    void apply() {
        if (!kernels.empty()) config.model.fine_kernels = kernels;
        if (!coarse_kernels.empty()) config.model.coarse_kernels = coarse_kernels;
        if (no_spectral) config.spectral_loss_enabled = false;
    }
};

void add_train_flags(CLI::App* cmd, CommonTrainFlags& f) {
    cmd->add_option("--epochs", f.config.epochs, "training epochs");
    cmd->add_option("--batch", f.config.batch_size, "mini-batch size");
    cmd->add_option("--lr", f.config.learning_rate, "learning rate");
    cmd->add_option("--lambda-spec", f.config.lambda_spec, "spectral loss weight");
    cmd->add_flag("--no-spectral-loss", f.no_spectral, "disable the spectral loss term");
    cmd->add_flag("--clip-x0", f.config.clip_x0,
                  "clamp the single-step clean estimate to [-1,1] before the spectral loss");
    cmd->add_option("--kernels", f.kernels, "fine encoder kernel sizes")->delimiter(',');
    cmd->add_option("--coarse-kernels", f.coarse_kernels, "coarse encoder kernel sizes")
        ->delimiter(',');
    cmd->add_option("--dilation", f.config.model.coarse_dilation, "coarse encoder dilation");
    cmd->add_option("--branch-channels", f.config.model.branch_channels,
                    "channels per encoder branch");
    cmd->add_option("--hidden", f.config.model.hidden, "RNN hidden size");
    cmd->add_option("--embed-dim", f.config.model.time_embed_dim, "timestep embedding size");
    cmd->add_option("--lambda-ppg", f.config.model.lambda_ppg, "PPG feature fusion ratio");
    cmd->add_option("--t-steps", f.config.T, "diffusion steps T");
    cmd->add_option("--beta-start", f.config.beta_start, "schedule beta at t=1");
    cmd->add_option("--beta-end", f.config.beta_end, "schedule beta at t=T");
    cmd->add_option("--seed", f.config.seed, "RNG seed");
    cmd->add_option("--threads", f.config.threads, "worker threads (0 = auto)");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"conditional-diffusion respiratory waveform estimation from PPG"};
    app.require_subcommand(1);

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "preprocess recordings into a segment store");
    std::string manifest_path, synthetic_path;
    store::IngestOptions ingest_opts;
    std::string ingest_out;
    ingest->add_option("--manifest", manifest_path, "dataset manifest (JSON)");
    ingest->add_option("--synthetic", synthetic_path, "synthetic dataset config (JSON)");
    ingest->add_option("--target-fs", ingest_opts.target_fs, "resampling target rate (Hz)");
    ingest->add_option("--cutoff", ingest_opts.lowpass_cutoff_hz, "low-pass cutoff (Hz)");
    ingest->add_option("--window-s", ingest_opts.window_s, "segment window (seconds)");
    ingest->add_option("--out", ingest_out, "output store directory");
    ingest->callback([&]() {
        if (manifest_path.empty() == synthetic_path.empty())
            throw ValidationError("ingest: give exactly one of --manifest or --synthetic");
        const fs::path out = ingest_out.empty() ? default_out("ingest") : fs::path(ingest_out);
        DirLock lock(out);
        std::vector<io::Recording> recordings;
        if (!manifest_path.empty()) {
            const auto manifest = io::load_manifest(manifest_path);
            for (const auto& entry : manifest.entries)
                recordings.push_back(io::load_recording(entry));
        } else {
            recordings = load_synthetic_dataset(synthetic_path);
        }
        const auto st = store::ingest(recordings, ingest_opts);
        st.save(out);
        write_config_echo(out, json{{"subcommand", "ingest"},
                                    {"manifest", manifest_path},
                                    {"synthetic", synthetic_path},
                                    {"target_fs", ingest_opts.target_fs},
                                    {"cutoff_hz", ingest_opts.lowpass_cutoff_hz},
                                    {"window_s", ingest_opts.window_s},
                                    {"subjects", st.subjects().size()},
                                    {"segments", st.segments.size()}});
        std::cout << "ingested " << st.subjects().size() << " subjects, " << st.segments.size()
                  << " segments -> " << out.string() << "\n";
    });

    // ---- train ----
    auto* traincmd = app.add_subcommand("train", "LOSO training runs");
    std::string train_store, train_subject = "all", train_out;
    CommonTrainFlags tf;
    traincmd->add_option("--store", train_store, "segment store directory")->required();
    traincmd->add_option("--subject", train_subject,
                         "held-out subject id, or 'all' for a full LOSO sweep");
    traincmd->add_option("--out", train_out, "output directory");
    add_train_flags(traincmd, tf);
    traincmd->callback([&]() {
        tf.apply();
        const fs::path out = train_out.empty() ? default_out("train") : fs::path(train_out);
        DirLock lock(out);
        const auto st = store::SegmentStore::load(train_store);
        std::vector<std::string> held;
        if (train_subject == "all")
            held = st.subjects();
        else
            held.push_back(train_subject);
        write_config_echo(out, json{{"subcommand", "train"},
                                    {"store", train_store},
                                    {"held_out", held},
                                    {"train", train_to_json(tf.config)}});
        for (const auto& subject : held) {
            const auto dataset = st.training_set_excluding(subject);
            if (dataset.empty())
                throw ValidationError("train: no training data when holding out '" + subject +
                                      "'");
            const fs::path run_dir = out / subject;
            const auto [params, record] = train::train(dataset, tf.config, run_dir);
            std::cout << "trained fold holding out " << subject << ": "
                      << record.epochs.size() << " epochs, final loss "
                      << record.epochs.back().total_loss << " -> " << run_dir.string() << "\n";
        }
    });

    // ---- shared sampling flags ----
    struct SampleFlags {
        std::string store, subject, sampler = "ddim";
        int nfe = 0;  // 0 = schedule T
        std::uint64_t seed = 0;
        int threads = 0;
        double window_s = 60.0;
    };

    const auto add_sample_flags = [](CLI::App* cmd, SampleFlags& f, bool with_window,
                                     bool with_nfe = true) {
        cmd->add_option("--store", f.store, "segment store directory")->required();
        cmd->add_option("--subject", f.subject, "held-out subject id")->required();
        cmd->add_option("--sampler", f.sampler, "ddpm or ddim");
        if (with_nfe) cmd->add_option("--nfe", f.nfe, "denoiser calls (default: schedule T)");
        cmd->add_option("--seed", f.seed, "sampling seed");
        cmd->add_option("--threads", f.threads, "worker threads (0 = auto)");
        if (with_window) cmd->add_option("--window-s", f.window_s, "evaluation window (seconds)");
    };

    // ---- sample ----
    auto* samplecmd = app.add_subcommand("sample", "generate waveforms for a held-out subject");
    std::string sample_ckpt, sample_out;
    bool sample_denorm = false;
    SampleFlags sf;
    samplecmd->add_option("--checkpoint", sample_ckpt, "model checkpoint")->required();
    samplecmd->add_option("--out", sample_out, "output directory");
    samplecmd->add_flag("--denorm", sample_denorm, "also write the de-normalized waveform");
    add_sample_flags(samplecmd, sf, false);
    samplecmd->callback([&]() {
        const fs::path out = sample_out.empty() ? default_out("sample") : fs::path(sample_out);
        DirLock lock(out);
        const auto st = store::SegmentStore::load(sf.store);
        const auto [params, config] = train::load_checkpoint(sample_ckpt);
        const auto sampler = diffusion::parse_sampler(sf.sampler);
        const int nfe = sf.nfe > 0 ? sf.nfe : config.T;
        const auto segs = st.segments_for(sf.subject);
        const auto schedule =
            diffusion::make_schedule(config.T, config.beta_start, config.beta_end);

        const auto start = std::chrono::steady_clock::now();
        const auto sampled =
            eval::sample_segments(params, schedule, segs, sampler, nfe, sf.seed, sf.threads);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::vector<int> indices;
        for (const auto* seg : segs) indices.push_back(seg->segment_index);
        const auto pred = eval::reconstruct(sampled, indices);
        write_waveform_tsv(out / ("pred_" + sf.subject + ".tsv"), pred, nullptr,
                           st.options.target_fs);
        if (sample_denorm) {
            std::vector<dsp::NormScale> scales;
            for (const auto* seg : segs) scales.push_back(seg->resp_scale);
            const auto raw = eval::reconstruct_denorm(sampled, indices, scales, dsp::kRespRange);
            write_waveform_tsv(out / ("pred_" + sf.subject + "_denorm.tsv"), raw, nullptr,
                               st.options.target_fs);
        }
        write_config_echo(out, json{{"subcommand", "sample"},
                                    {"checkpoint", sample_ckpt},
                                    {"subject", sf.subject},
                                    {"sampler", sf.sampler},
                                    {"nfe", nfe},
                                    {"seed", sf.seed},
                                    {"segments", segs.size()}});
        std::cout << "sampled " << segs.size() << " segments (" << sf.sampler << ", NFE " << nfe
                  << ") in " << seconds << " s -> " << out.string() << "\n";
    });

    // ---- eval ----
    auto* evalcmd = app.add_subcommand("eval", "score sampled waveforms against the reference");
    std::string eval_ckpt, eval_out, eval_pred, eval_truth;
    double eval_fs = 30.0;
    SampleFlags ef;
    evalcmd->add_option("--checkpoint", eval_ckpt, "model checkpoint");
    evalcmd->add_option("--out", eval_out, "output directory");
    evalcmd->add_option("--pred", eval_pred, "pre-computed prediction waveform file");
    evalcmd->add_option("--truth", eval_truth, "reference waveform file");
    evalcmd->add_option("--fs", eval_fs, "sampling rate for file mode (Hz)");
    add_sample_flags(evalcmd, ef, true);
    // file mode needs neither store nor subject
    evalcmd->get_option("--store")->required(false);
    evalcmd->get_option("--subject")->required(false);
    evalcmd->callback([&]() {
        const fs::path out = eval_out.empty() ? default_out("eval") : fs::path(eval_out);
        DirLock lock(out);
        eval::EvalReport report;
        double seconds = 0.0;
        if (!eval_pred.empty() || !eval_truth.empty()) {
            if (eval_pred.empty() || eval_truth.empty())
                throw ValidationError("eval: file mode needs both --pred and --truth");
            const auto pred = read_waveform_file(eval_pred);
            const auto truth = read_waveform_file(eval_truth);
            eval::EvalConfigEcho echo;
            echo.sampler = "(file mode)";
            report = eval::evaluate(pred, truth, eval_fs, ef.window_s, echo);
            report.subject_id = fs::path(eval_pred).stem().string();
        } else {
            if (eval_ckpt.empty() || ef.store.empty() || ef.subject.empty())
                throw ValidationError(
                    "eval: model mode needs --checkpoint, --store and --subject");
            const auto st = store::SegmentStore::load(ef.store);
            const auto [params, config] = train::load_checkpoint(eval_ckpt);
            const auto sampler = diffusion::parse_sampler(ef.sampler);
            const int nfe = ef.nfe > 0 ? ef.nfe : config.T;
            const auto start = std::chrono::steady_clock::now();
            report = eval::evaluate_subject(params, config, st, ef.subject, sampler, nfe, ef.seed,
                                            ef.window_s, ef.threads);
            seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        write_report(out, report);
        write_config_echo(out, json{{"subcommand", "eval"},
                                    {"checkpoint", eval_ckpt},
                                    {"pred", eval_pred},
                                    {"truth", eval_truth},
                                    {"subject", report.subject_id},
                                    {"sampler", report.config.sampler},
                                    {"nfe", report.config.nfe},
                                    {"seed", ef.seed},
                                    {"window_s", report.config.window_s}});
        std::cout << "rr_mae_bpm " << report.rr_mae << "  waveform_mae " << report.waveform_mae
                  << "  (" << report.windows.size() << " windows";
        if (seconds > 0.0) std::cout << ", sampled+scored in " << seconds << " s";
        std::cout << ") -> " << out.string() << "\n";
    });

    // ---- plot ----
    auto* plotcmd = app.add_subcommand("plot", "per-window overlay traces (pred vs truth)");
    std::vector<std::string> plot_ckpts;
    std::vector<int> plot_nfes;
    std::string plot_out;
    SampleFlags pf;
    plotcmd->add_option("--checkpoint", plot_ckpts, "model checkpoint(s)")->required();
    plotcmd->add_option("--nfe", plot_nfes, "NFE value(s)")->delimiter(',');
    plotcmd->add_option("--out", plot_out, "output directory");
    add_sample_flags(plotcmd, pf, false, false);
    plotcmd->callback([&]() {
        const fs::path out = plot_out.empty() ? default_out("plot") : fs::path(plot_out);
        DirLock lock(out);
        const auto st = store::SegmentStore::load(pf.store);
        const auto sampler = diffusion::parse_sampler(pf.sampler);
        const auto segs = st.segments_for(pf.subject);
        std::vector<int> indices;
        std::vector<std::vector<double>> truth_segs;
        for (const auto* seg : segs) {
            indices.push_back(seg->segment_index);
            truth_segs.push_back(seg->resp);
        }
        const auto truth = eval::reconstruct(truth_segs, indices);
        for (const auto& ckpt : plot_ckpts) {
            const auto [params, config] = train::load_checkpoint(ckpt);
            const auto schedule =
                diffusion::make_schedule(config.T, config.beta_start, config.beta_end);
            std::vector<int> nfes = plot_nfes;
            if (nfes.empty()) nfes.push_back(config.T);
            for (const int nfe : nfes) {
                const auto sampled = eval::sample_segments(params, schedule, segs, sampler, nfe,
                                                           pf.seed, pf.threads);
                const auto pred = eval::reconstruct(sampled, indices);
                const std::string name = "plot_" + pf.subject + "_" +
                                         fs::path(ckpt).stem().string() + "_" + pf.sampler +
                                         "_nfe" + std::to_string(nfe) + ".tsv";
                write_waveform_tsv(out / name, pred, &truth, st.options.target_fs);
            }
        }
        write_config_echo(out, json{{"subcommand", "plot"},
                                    {"checkpoints", plot_ckpts},
                                    {"subject", pf.subject},
                                    {"sampler", pf.sampler},
                                    {"nfe", plot_nfes},
                                    {"seed", pf.seed}});
        std::cout << "plot data -> " << out.string() << "\n";
    });

    // ---- benchmark ----
    auto* benchcmd = app.add_subcommand("benchmark", "RR-error table over checkpoints and NFEs");
    std::vector<std::string> bench_ckpts, bench_labels;
    std::vector<int> bench_nfes{50, 6};
    std::string bench_out;
    SampleFlags bf;
    benchcmd->add_option("--checkpoints", bench_ckpts, "checkpoint files")->delimiter(',');
    benchcmd->add_option("--labels", bench_labels, "row labels (default: file stems)")
        ->delimiter(',');
    benchcmd->add_option("--nfe", bench_nfes, "NFE values")->delimiter(',');
    benchcmd->add_option("--out", bench_out, "output directory");
    add_sample_flags(benchcmd, bf, true, false);
    benchcmd->callback([&]() {
        const fs::path out = bench_out.empty() ? default_out("benchmark") : fs::path(bench_out);
        DirLock lock(out);
        const auto st = store::SegmentStore::load(bf.store);
        const auto sampler = diffusion::parse_sampler(bf.sampler);
        if (!bench_labels.empty() && bench_labels.size() != bench_ckpts.size())
            throw ValidationError("benchmark: --labels count must match --checkpoints");
        std::vector<std::pair<std::string, fs::path>> models;
        for (std::size_t i = 0; i < bench_ckpts.size(); ++i) {
            const std::string label =
                i < bench_labels.size() ? bench_labels[i] : fs::path(bench_ckpts[i]).stem().string();
            models.emplace_back(label, bench_ckpts[i]);
        }
        const auto rows = eval::benchmark(models, st, bf.subject, sampler, bench_nfes, bf.seed,
                                          bf.window_s, bf.threads);
        const std::string table = eval::render_benchmark_table(rows);
        std::ofstream txt(out / "benchmark.txt", std::ios::trunc);
        txt << table;
        json jrows = json::array();
        for (const auto& r : rows)
            jrows.push_back(json{{"model", r.model},
                                 {"nfe", r.nfe},
                                 {"window_s", r.window_s},
                                 {"rr_mae_bpm", r.rr_mae}});
        std::ofstream js(out / "benchmark.json", std::ios::trunc);
        js << jrows.dump(2) << "\n";
        write_config_echo(out, json{{"subcommand", "benchmark"},
                                    {"checkpoints", bench_ckpts},
                                    {"subject", bf.subject},
                                    {"sampler", bf.sampler},
                                    {"nfe", bench_nfes},
                                    {"seed", bf.seed},
                                    {"window_s", bf.window_s}});
        std::cout << table;
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
