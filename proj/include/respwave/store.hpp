#ifndef RESPWAVE_STORE_HPP
#define RESPWAVE_STORE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "respwave/dsp.hpp"
#include "respwave/signal_io.hpp"

namespace respwave::store {

struct IngestOptions {
    double target_fs = 30.0;
    double lowpass_cutoff_hz = 1.0;
    double window_s = 5.0;
};

// Preprocessed segments for a dataset: resample -> lowpass -> segment ->
// normalize applied per recording, keyed by subject. Persisted as a binary
// waveform file plus a JSON index carrying provenance and scales.
class SegmentStore {
  public:
    IngestOptions options;
    std::vector<dsp::SegmentPair> segments;  // grouped by subject, index order

    int segment_samples() const;
    std::vector<std::string> subjects() const;
    std::vector<const dsp::SegmentPair*> segments_for(const std::string& subject_id) const;
    std::vector<dsp::SegmentPair> training_set_excluding(const std::string& subject_id) const;

    void save(const std::filesystem::path& dir) const;
    static SegmentStore load(const std::filesystem::path& dir);
};

// Full preprocessing chain for one recording.
std::vector<dsp::SegmentPair> preprocess_recording(const io::Recording& rec,
                                                   const IngestOptions& options);

SegmentStore ingest(const std::vector<io::Recording>& recordings, const IngestOptions& options);

}  // namespace respwave::store

#endif
