#include "respwave/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "respwave/errors.hpp"

namespace respwave::store {

namespace {

using nlohmann::json;

constexpr int kStoreVersion = 1;

void write_doubles(std::ofstream& out, const std::vector<double>& values) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& values, std::size_t count,
                  const std::string& file) {
    values.resize(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw IoError(file + ": truncated segment data");
}

json scale_to_json(const dsp::NormScale& s) {
    return json{{"offset", s.offset}, {"span", s.span}, {"constant", s.constant}};
}

dsp::NormScale scale_from_json(const json& j) {
    dsp::NormScale s;
    s.offset = j.at("offset").get<double>();
    s.span = j.at("span").get<double>();
    s.constant = j.at("constant").get<bool>();
    return s;
}

}  // namespace

int SegmentStore::segment_samples() const {
    return static_cast<int>(std::llround(options.target_fs * options.window_s));
}

std::vector<std::string> SegmentStore::subjects() const {
    std::vector<std::string> out;
    for (const auto& seg : segments)
        if (out.empty() || out.back() != seg.subject_id)
            if (std::find(out.begin(), out.end(), seg.subject_id) == out.end())
                out.push_back(seg.subject_id);
    return out;
}

std::vector<const dsp::SegmentPair*> SegmentStore::segments_for(
    const std::string& subject_id) const {
    std::vector<const dsp::SegmentPair*> out;
    for (const auto& seg : segments)
        if (seg.subject_id == subject_id) out.push_back(&seg);
    if (out.empty()) throw ValidationError("store: unknown subject id '" + subject_id + "'");
    std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
        return a->segment_index < b->segment_index;
    });
    return out;
}

std::vector<dsp::SegmentPair> SegmentStore::training_set_excluding(
    const std::string& subject_id) const {
    segments_for(subject_id);  // validates the id
    std::vector<dsp::SegmentPair> out;
    for (const auto& seg : segments)
        if (seg.subject_id != subject_id) out.push_back(seg);
    return out;
}

std::vector<dsp::SegmentPair> preprocess_recording(const io::Recording& rec,
                                                   const IngestOptions& options) {
    std::vector<double> ppg = dsp::resample(rec.ppg, rec.fs, options.target_fs);
    std::vector<double> resp = dsp::resample(rec.resp, rec.fs, options.target_fs);
    ppg = dsp::lowpass(ppg, options.target_fs, options.lowpass_cutoff_hz);
    resp = dsp::lowpass(resp, options.target_fs, options.lowpass_cutoff_hz);
    const auto ppg_windows = dsp::segment(ppg, options.target_fs, options.window_s);
    const auto resp_windows = dsp::segment(resp, options.target_fs, options.window_s);

    std::vector<dsp::SegmentPair> out;
    out.reserve(ppg_windows.size());
    for (std::size_t i = 0; i < ppg_windows.size(); ++i) {
        dsp::SegmentPair seg;
        seg.subject_id = rec.subject_id;
        seg.segment_index = static_cast<int>(i);
        auto [ppg_norm, ppg_scale] = dsp::normalize(ppg_windows[i], dsp::kPpgRange);
        auto [resp_norm, resp_scale] = dsp::normalize(resp_windows[i], dsp::kRespRange);
        seg.ppg = std::move(ppg_norm);
        seg.resp = std::move(resp_norm);
        seg.ppg_scale = ppg_scale;
        seg.resp_scale = resp_scale;
        out.push_back(std::move(seg));
    }
    return out;
}

SegmentStore ingest(const std::vector<io::Recording>& recordings, const IngestOptions& options) {
    SegmentStore store;
    store.options = options;
    for (const auto& rec : recordings) {
        auto segs = preprocess_recording(rec, options);
        store.segments.insert(store.segments.end(), std::make_move_iterator(segs.begin()),
                              std::make_move_iterator(segs.end()));
    }
    return store;
}

void SegmentStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    const std::filesystem::path bin_path = dir / "segments.bin";
    std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
    if (!bin) throw IoError("cannot write " + bin_path.string());

    json index;
    index["format_version"] = kStoreVersion;
    index["target_fs"] = options.target_fs;
    index["lowpass_cutoff_hz"] = options.lowpass_cutoff_hz;
    index["window_s"] = options.window_s;
    index["segment_samples"] = segment_samples();
    json entries = json::array();
    for (const auto& seg : segments) {
        write_doubles(bin, seg.ppg);
        write_doubles(bin, seg.resp);
        entries.push_back(json{{"subject_id", seg.subject_id},
                               {"segment_index", seg.segment_index},
                               {"ppg_scale", scale_to_json(seg.ppg_scale)},
                               {"resp_scale", scale_to_json(seg.resp_scale)}});
    }
    index["segments"] = std::move(entries);
    if (!bin) throw IoError("write failed: " + bin_path.string());

    std::ofstream idx(dir / "index.json", std::ios::trunc);
    if (!idx) throw IoError("cannot write store index in " + dir.string());
    idx << index.dump(2) << "\n";
}

SegmentStore SegmentStore::load(const std::filesystem::path& dir) {
    const std::filesystem::path idx_path = dir / "index.json";
    std::ifstream idx(idx_path);
    if (!idx) throw IoError("cannot open store index: " + idx_path.string());
    json index;
    try {
        idx >> index;
    } catch (const json::exception& e) {
        throw IoError(idx_path.string() + ": corrupt index: " + e.what());
    }
    const int version = index.at("format_version").get<int>();
    if (version != kStoreVersion)
        throw IoError(idx_path.string() + ": unsupported store format_version " +
                      std::to_string(version));

    SegmentStore store;
    store.options.target_fs = index.at("target_fs").get<double>();
    store.options.lowpass_cutoff_hz = index.at("lowpass_cutoff_hz").get<double>();
    store.options.window_s = index.at("window_s").get<double>();
    const auto samples = static_cast<std::size_t>(index.at("segment_samples").get<int>());

    const std::filesystem::path bin_path = dir / "segments.bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot open " + bin_path.string());
    for (const auto& e : index.at("segments")) {
        dsp::SegmentPair seg;
        seg.subject_id = e.at("subject_id").get<std::string>();
        seg.segment_index = e.at("segment_index").get<int>();
        seg.ppg_scale = scale_from_json(e.at("ppg_scale"));
        seg.resp_scale = scale_from_json(e.at("resp_scale"));
        read_doubles(bin, seg.ppg, samples, bin_path.string());
        read_doubles(bin, seg.resp, samples, bin_path.string());
        store.segments.push_back(std::move(seg));
    }
    return store;
}

}  // namespace respwave::store
