#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "carmsim/dataset.hpp"
#include "carmsim/error.hpp"
#include "carmsim/rng.hpp"
#include "support.hpp"

using namespace carmsim;

namespace {

std::vector<int> brute_force_order(const Vec3& p, const LandmarkSet& set) {
    std::vector<std::pair<double, int>> all;
    for (const auto& lm : set.landmarks()) all.emplace_back((lm.position - p).norm(), lm.index);
    std::sort(all.begin(), all.end());
    std::vector<int> out;
    for (const auto& [d, i] : all) out.push_back(i);
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<DatasetSource> phantom_sources(int train, int test) {
    std::vector<DatasetSource> out;
    for (int i = 0; i < train + test; ++i) {
        out.push_back({"v" + std::to_string(i), i < train ? Split::train : Split::test, [i] {
                           auto p = generate_phantom(static_cast<std::uint64_t>(100 + i));
                           return std::pair<Volume, LandmarkSet>(std::move(p.volume), std::move(p.landmarks));
                       }});
    }
    return out;
}

}  // namespace

TEST(NearestK, MatchesExhaustiveSort) {
    const auto& p = fixture::phantom();
    auto rng = make_engine(2, "nearest");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 2000; ++n) {
        const Vec3 q = p.volume.extent().cwiseProduct(Vec3(u(rng), u(rng), u(rng)));
        const auto expected = brute_force_order(q, p.landmarks);
        for (int k : {1, 3, 14}) {
            const auto got = nearest_k(q, p.landmarks, k);
            ASSERT_EQ(got.indices, std::vector<int>(expected.begin(), expected.begin() + k));
            ASSERT_TRUE(std::is_sorted(got.distances_mm.begin(), got.distances_mm.end()));
        }
    }
}

TEST(NearestK, TiesBreakByIndexAndKIsChecked) {
    const auto& p = fixture::phantom();
    auto lms = p.landmarks.landmarks();
    lms[4].position = lms[3].position;  // landmarks 4 and 5 coincide
    std::swap(lms[4].position.x(), lms[4].position.x());
    // Keep sidedness valid by not calling validate_within.
    const LandmarkSet set(lms);
    const auto r = nearest_k(lms[3].position, set, 2);
    EXPECT_EQ(r.indices, (std::vector<int>{4, 5}));
    EXPECT_THROW(nearest_k(Vec3::Zero(), set, 0), Error);
    EXPECT_THROW(nearest_k(Vec3::Zero(), set, 15), Error);
}

TEST(Label, FormatParseRoundTrip) {
    const auto& p = fixture::phantom();
    const auto schema = p.landmarks.schema();
    auto rng = make_engine(3, "label");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 2000; ++n) {
        const Vec3 q = p.volume.extent().cwiseProduct(Vec3(u(rng), u(rng), u(rng)));
        const auto ranked = nearest_k(q, p.landmarks, 3);
        const auto text = format_label(ranked, p.landmarks, rng());
        const auto parsed = parse_label(text, schema);
        ASSERT_TRUE(std::holds_alternative<RankedLandmarks>(parsed)) << text;
        ASSERT_EQ(std::get<RankedLandmarks>(parsed).indices, ranked.indices);
    }
}

TEST(Label, ExactFormat) {
    const auto& p = fixture::phantom();
    RankedLandmarks r{{1, 10, 2}, {0, 0, 0}};
    const auto text = format_label(r, p.landmarks, 0);
    EXPECT_EQ(text.front(), '[');
    EXPECT_EQ(text.back(), ']');
    EXPECT_EQ(text.rfind("[1: ", 0), 0u);
    EXPECT_NE(text.find(", 10: "), std::string::npos);
    EXPECT_NE(text.find(", 2: "), std::string::npos);
    EXPECT_EQ(format_label(r, p.landmarks, 99), format_label(r, p.landmarks, 99));
}

TEST(Label, ParseErrors) {
    const auto& s = LandmarkSchema::default_schema();
    auto reason = [&](const std::string& t, std::size_t arity = 3) {
        const auto r = parse_label(t, s, arity);
        return std::holds_alternative<ParseError>(r) ? std::get<ParseError>(r).reason : std::string("ok");
    };
    EXPECT_EQ(reason("[1: Skull, 10: T1, 11: Sternum]"), "ok");
    EXPECT_EQ(reason("  [ 1 : cranium ,10:t1,11: Breastbone ]  "), "ok");
    EXPECT_EQ(reason("1: Skull"), "expected '['");
    EXPECT_NE(reason("[1: Pelvis, 10: T1, 11: Sternum]").find("unknown landmark name"), std::string::npos);
    EXPECT_NE(reason("[1: T1, 10: T1, 11: Sternum]").find("name resolves to landmark 10"), std::string::npos);
    EXPECT_NE(reason("[1: Skull, 1: Skull, 11: Sternum]").find("duplicate landmark index"), std::string::npos);
    EXPECT_NE(reason("[1: Skull, 10: T1]").find("arity"), std::string::npos);
    EXPECT_EQ(reason("[1: Skull, 10: T1]", 0), "ok");
    EXPECT_NE(reason("[1: Skull, 10: T1, 11: Sternum] extra").find("trailing"), std::string::npos);
    EXPECT_NE(reason("[1: Skull, 10: T1, 11: Sternum").find("unterminated"), std::string::npos);
    EXPECT_NE(reason("[15: Skull]", 0).find("outside"), std::string::npos);
    EXPECT_EQ(reason("[]", 0), "empty landmark list");
}

TEST(Dataset, CountsAndLeakage) {
    const auto c = dataset_counts({"a", "b"}, {"c"}, 1024);
    EXPECT_EQ(c.train, 2048u);
    EXPECT_EQ(c.test, 1024u);
    std::vector<std::string> train, test;
    for (int i = 0; i < 50; ++i) train.push_back("t" + std::to_string(i));
    for (int i = 0; i < 10; ++i) test.push_back("h" + std::to_string(i));
    const auto full = dataset_counts(train, test, 1024);
    EXPECT_EQ(full.train, 51200u);
    EXPECT_EQ(full.test, 10240u);
    EXPECT_THROW(dataset_counts({"a"}, {"a"}, 4), Error);
    EXPECT_THROW(dataset_counts({"a", "a"}, {}, 4), Error);
    EXPECT_THROW(dataset_counts({"a"}, {}, 0), Error);
}

TEST(Dataset, BuildIsDeterministicAndConsistent) {
    DatasetConfig cfg;
    cfg.per_volume = 6;
    cfg.seed = 21;
    cfg.geometry.cols = 32;
    cfg.geometry.rows = 32;
    const auto d1 = fixture::scratch("dataset_a");
    const auto d2 = fixture::scratch("dataset_b");
    const auto s1 = build_dataset(phantom_sources(2, 1), cfg, d1);
    build_dataset(phantom_sources(2, 1), cfg, d2);
    EXPECT_EQ(s1.counts.train, 12u);
    EXPECT_EQ(s1.counts.test, 6u);
    EXPECT_EQ(slurp(d1 / "manifest.jsonl"), slurp(d2 / "manifest.jsonl"));

    const auto records = load_manifest(d1 / "manifest.jsonl");
    ASSERT_EQ(records.size(), 18u);
    const auto& schema = LandmarkSchema::default_schema();
    for (const auto& r : records) {
        EXPECT_TRUE(std::filesystem::exists(d1 / r.image_path)) << r.image_path;
        EXPECT_EQ(slurp(d1 / r.image_path), slurp(d2 / r.image_path));
        const auto parsed = parse_label(r.label_text, schema);
        ASSERT_TRUE(std::holds_alternative<RankedLandmarks>(parsed));
        EXPECT_EQ(std::get<RankedLandmarks>(parsed).indices, r.ranked.indices);
        EXPECT_EQ(parse_manifest_line(manifest_line(r)).record_id, r.record_id);
    }
    EXPECT_EQ(records.front().record_id, "v0/00000");
    EXPECT_EQ(records.back().split, Split::test);
}

TEST(Dataset, AddingAVolumeDoesNotPerturbOthers) {
    DatasetConfig cfg;
    cfg.per_volume = 4;
    cfg.seed = 5;
    cfg.write_images = false;
    const auto a = fixture::scratch("dataset_c");
    const auto b = fixture::scratch("dataset_d");
    build_dataset(phantom_sources(1, 0), cfg, a);
    build_dataset(phantom_sources(2, 0), cfg, b);
    const auto one = load_manifest(a / "manifest.jsonl");
    const auto two = load_manifest(b / "manifest.jsonl");
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(manifest_line(one[i]), manifest_line(two[i]));
}
