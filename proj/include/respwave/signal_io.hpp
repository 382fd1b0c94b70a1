#ifndef RESPWAVE_SIGNAL_IO_HPP
#define RESPWAVE_SIGNAL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace respwave::io {

// A subject's paired PPG/respiration time series. Channels always have equal
// length and contain no NaN/Inf after ingestion.
struct Recording {
    std::string subject_id;
    std::vector<double> ppg;
    std::vector<double> resp;
    double fs = 0.0;
    double duration_s() const { return static_cast<double>(ppg.size()) / fs; }
};

struct ManifestEntry {
    std::string subject_id;
    std::filesystem::path path;  // resolved against the manifest directory
    std::string ppg_column;
    std::string resp_column;
    double fs = 0.0;
};

struct DatasetManifest {
    int format_version = 1;
    std::vector<ManifestEntry> entries;
};

// JSON manifest: {"format_version": 1, "entries": [{"subject_id", "path",
// "ppg_column", "resp_column", "fs"}]}. Unknown keys are rejected; subject
// ids must be unique and every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

// Delimiter-separated text with a header row (comma or tab, sniffed from the
// header). Errors name the file and 1-based data row.
Recording load_recording(const ManifestEntry& entry);

struct SyntheticConfig {
    double rr_bpm = 15.0;        // breaths per minute, [6, 60]
    double hr_bpm = 70.0;        // heart beats per minute, [30, 180]
    double am_depth = 0.0;       // amplitude modulation strength, [0, 1]
    double fm_depth = 0.0;       // frequency modulation strength, [0, 1]
    double baseline_depth = 0.0; // baseline modulation strength, [0, 1]
    double noise_std = 0.0;
    double duration_s = 60.0;
    double fs = 30.0;
    void validate() const;
};

// resp(t) = sin(2*pi*rr*t/60); PPG is a raised-cosine pulse train with
// amplitude, frequency and baseline modulation by resp plus Gaussian noise.
// Deterministic for a fixed seed.
Recording generate_synthetic(const SyntheticConfig& config, std::uint64_t seed,
                             const std::string& subject_id = "synthetic");

// Leave-one-subject-out partition: (train, test) with the held-out subject's
// recordings in test. Unknown subject id is an error.
std::pair<std::vector<Recording>, std::vector<Recording>> split_loso(
    const std::vector<Recording>& recordings, const std::string& held_out);

}  // namespace respwave::io

#endif
