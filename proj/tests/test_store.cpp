#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "respwave/errors.hpp"
#include "respwave/store.hpp"

using namespace respwave;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("respwave_store_test_" +
                                                  std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

io::Recording synth_subject(const std::string& id, double rr, double duration_s,
                            std::uint64_t seed) {
    io::SyntheticConfig cfg;
    cfg.rr_bpm = rr;
    cfg.hr_bpm = 70.0;
    cfg.am_depth = 0.3;
    cfg.fm_depth = 0.3;
    cfg.baseline_depth = 0.3;
    cfg.noise_std = 0.05;
    cfg.duration_s = duration_s;
    cfg.fs = 30.0;
    return io::generate_synthetic(cfg, seed, id);
}

}  // namespace

TEST_CASE("preprocess: an 8-minute recording yields 96 segments in range") {
    const auto rec = synth_subject("s1", 15.0, 480.0, 1);
    const auto segs = store::preprocess_recording(rec, store::IngestOptions{});
    REQUIRE(segs.size() == 96);
    for (const auto& seg : segs) {
        CHECK(seg.ppg.size() == 150);
        CHECK(seg.resp.size() == 150);
        for (const double v : seg.ppg) {
            CHECK(v >= -1e-9);
            CHECK(v <= 1.0 + 1e-9);
        }
        for (const double v : seg.resp) {
            CHECK(v >= -1.0 - 1e-9);
            CHECK(v <= 1.0 + 1e-9);
        }
        CHECK((seg.ppg_scale.span > 0.0 || seg.ppg_scale.constant));
        CHECK((seg.resp_scale.span > 0.0 || seg.resp_scale.constant));
    }
    for (std::size_t i = 0; i < segs.size(); ++i)
        CHECK(segs[i].segment_index == static_cast<int>(i));
}

TEST_CASE("store round trip and byte-identical re-save") {
    std::vector<io::Recording> recs{synth_subject("a", 12.0, 60.0, 1),
                                    synth_subject("b", 18.0, 60.0, 2)};
    const auto st = store::ingest(recs, store::IngestOptions{});
    CHECK(st.subjects() == std::vector<std::string>{"a", "b"});
    CHECK(st.segments.size() == 24);

    TempDir tmp;
    st.save(tmp.path / "store");
    const auto loaded = store::SegmentStore::load(tmp.path / "store");
    REQUIRE(loaded.segments.size() == st.segments.size());
    for (std::size_t i = 0; i < st.segments.size(); ++i) {
        CHECK(loaded.segments[i].ppg == st.segments[i].ppg);
        CHECK(loaded.segments[i].resp == st.segments[i].resp);
        CHECK(loaded.segments[i].subject_id == st.segments[i].subject_id);
        CHECK(loaded.segments[i].ppg_scale.offset == st.segments[i].ppg_scale.offset);
        CHECK(loaded.segments[i].resp_scale.span == st.segments[i].resp_scale.span);
    }

    loaded.save(tmp.path / "store2");
    CHECK(slurp(tmp.path / "store" / "segments.bin") ==
          slurp(tmp.path / "store2" / "segments.bin"));
    CHECK(slurp(tmp.path / "store" / "index.json") == slurp(tmp.path / "store2" / "index.json"));
}

TEST_CASE("store subject queries and LOSO exclusion") {
    std::vector<io::Recording> recs{synth_subject("a", 12.0, 30.0, 1),
                                    synth_subject("b", 18.0, 30.0, 2),
                                    synth_subject("c", 24.0, 30.0, 3)};
    const auto st = store::ingest(recs, store::IngestOptions{});
    const auto held = st.segments_for("b");
    CHECK(held.size() == 6);
    for (const auto* seg : held) CHECK(seg->subject_id == "b");

    const auto rest = st.training_set_excluding("b");
    CHECK(rest.size() == 12);
    for (const auto& seg : rest) CHECK(seg.subject_id != "b");

    CHECK_THROWS_AS(st.segments_for("zz"), ValidationError);
}

TEST_CASE("store load failures") {
    TempDir tmp;
    CHECK_THROWS_AS(store::SegmentStore::load(tmp.path / "missing"), IoError);

    std::vector<io::Recording> recs{synth_subject("a", 12.0, 30.0, 1)};
    const auto st = store::ingest(recs, store::IngestOptions{});
    st.save(tmp.path / "store");
    // truncate the binary file
    const auto bin = slurp(tmp.path / "store" / "segments.bin");
    std::ofstream out(tmp.path / "store" / "segments.bin", std::ios::binary | std::ios::trunc);
    out << bin.substr(0, bin.size() / 2);
    out.close();
    CHECK_THROWS_AS(store::SegmentStore::load(tmp.path / "store"), IoError);
}
