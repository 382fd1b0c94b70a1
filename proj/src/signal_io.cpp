#include "respwave/signal_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "respwave/errors.hpp"

namespace respwave::io {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& context) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key))
            throw ValidationError(context + ": unknown key '" + key + "'");
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == delim) cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, const std::string& file, long row,
                  const std::string& column) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && *first == ' ') ++first;
    while (last != first && *(last - 1) == ' ') --last;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw IoError(file + ": data row " + std::to_string(row) + ": non-numeric value '" +
                      cell + "' in column " + column);
    if (!std::isfinite(value))
        throw IoError(file + ": data row " + std::to_string(row) + ": non-finite value in column " +
                      column);
    return value;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError("manifest parse error in " + manifest_path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("manifest must be a JSON object");
    reject_unknown_keys(doc, {"format_version", "entries"}, "manifest");
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
        throw ValidationError("manifest: format_version (integer) is required");
    DatasetManifest manifest;
    manifest.format_version = doc["format_version"].get<int>();
    if (manifest.format_version != 1)
        throw ValidationError("manifest: unsupported format_version " +
                              std::to_string(manifest.format_version));
    if (!doc.contains("entries") || !doc["entries"].is_array())
        throw ValidationError("manifest: entries (array) is required");

    const auto base = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                      : std::filesystem::path(".");
    std::set<std::string> seen;
    for (const auto& e : doc["entries"]) {
        reject_unknown_keys(e, {"subject_id", "path", "ppg_column", "resp_column", "fs"},
                            "manifest entry");
        ManifestEntry entry;
        entry.subject_id = e.at("subject_id").get<std::string>();
        entry.path = base / e.at("path").get<std::string>();
        entry.ppg_column = e.at("ppg_column").get<std::string>();
        entry.resp_column = e.at("resp_column").get<std::string>();
        entry.fs = e.at("fs").get<double>();
        if (!(entry.fs > 0.0))
            throw ValidationError("manifest entry " + entry.subject_id + ": fs must be > 0");
        if (!seen.insert(entry.subject_id).second)
            throw ValidationError("manifest: duplicate subject_id '" + entry.subject_id + "'");
        if (!std::filesystem::exists(entry.path))
            throw IoError("manifest entry " + entry.subject_id + ": missing file " +
                          entry.path.string());
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

Recording load_recording(const ManifestEntry& entry) {
    const std::string file = entry.path.string();
    std::ifstream in(entry.path);
    if (!in) throw IoError("cannot open signal file: " + file);
    if (!(entry.fs > 0.0)) throw ValidationError(file + ": source fs must be > 0");

    std::string header;
    if (!std::getline(in, header)) throw IoError(file + ": empty file");
    const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
    const std::vector<std::string> columns = split_line(header, delim);

    const auto find_column = [&](const std::string& name) {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw IoError(file + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    };
    const std::size_t ppg_idx = find_column(entry.ppg_column);
    const std::size_t resp_idx = find_column(entry.resp_column);

    Recording rec;
    rec.subject_id = entry.subject_id;
    rec.fs = entry.fs;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        ++row;
        const std::vector<std::string> cells = split_line(line, delim);
        if (cells.size() <= std::max(ppg_idx, resp_idx))
            throw IoError(file + ": data row " + std::to_string(row) +
                          ": fewer cells than header columns (length mismatch)");
        rec.ppg.push_back(parse_cell(cells[ppg_idx], file, row, entry.ppg_column));
        rec.resp.push_back(parse_cell(cells[resp_idx], file, row, entry.resp_column));
    }
    if (rec.ppg.empty()) throw IoError(file + ": no data rows");
    return rec;
}

void SyntheticConfig::validate() const {
    if (!(rr_bpm >= 6.0 && rr_bpm <= 60.0))
        throw ValidationError("synthetic: rr_bpm must be in [6, 60]");
    if (!(hr_bpm >= 30.0 && hr_bpm <= 180.0))
        throw ValidationError("synthetic: hr_bpm must be in [30, 180]");
    for (const double d : {am_depth, fm_depth, baseline_depth})
        if (!(d >= 0.0 && d <= 1.0))
            throw ValidationError("synthetic: modulation depths must be in [0, 1]");
    if (!(noise_std >= 0.0)) throw ValidationError("synthetic: noise_std must be >= 0");
    if (!(duration_s > 0.0) || !(fs > 0.0))
        throw ValidationError("synthetic: duration_s and fs must be > 0");
}

Recording generate_synthetic(const SyntheticConfig& config, std::uint64_t seed,
                             const std::string& subject_id) {
    config.validate();
    const auto n = static_cast<std::size_t>(std::llround(config.fs * config.duration_s));
    const double omega_r = 2.0 * std::numbers::pi * config.rr_bpm / 60.0;
    const double omega_h = 2.0 * std::numbers::pi * config.hr_bpm / 60.0;

    // Raised-cosine pulse occupying the first 40% of each cardiac cycle.
    constexpr double kPulseWidth = 0.4;
    const auto pulse = [](double phase) {
        double cycles = phase / (2.0 * std::numbers::pi);
        double frac = cycles - std::floor(cycles);
        if (frac >= kPulseWidth) return 0.0;
        return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * frac / kPulseWidth));
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Recording rec;
    rec.subject_id = subject_id;
    rec.fs = config.fs;
    rec.ppg.resize(n);
    rec.resp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / config.fs;
        const double resp = std::sin(omega_r * t);
        // phase(t) = omega_h * (t + fm * (1 - cos(omega_r t)) / omega_r),
        // the closed-form integral of omega_h * (1 + fm * resp).
        const double phase =
            omega_h * (t + config.fm_depth * (1.0 - std::cos(omega_r * t)) / omega_r);
        double ppg = (1.0 + config.am_depth * resp) * pulse(phase) +
                     config.baseline_depth * resp;
        if (config.noise_std > 0.0) ppg += config.noise_std * gauss(rng);
        rec.resp[i] = resp;
        rec.ppg[i] = ppg;
    }
    return rec;
}

std::pair<std::vector<Recording>, std::vector<Recording>> split_loso(
    const std::vector<Recording>& recordings, const std::string& held_out) {
    bool found = false;
    for (const auto& r : recordings)
        if (r.subject_id == held_out) found = true;
    if (!found) throw ValidationError("split_loso: unknown subject id '" + held_out + "'");
    std::vector<Recording> train, test;
    for (const auto& r : recordings)
        (r.subject_id == held_out ? test : train).push_back(r);
    return {std::move(train), std::move(test)};
}

}  // namespace respwave::io
