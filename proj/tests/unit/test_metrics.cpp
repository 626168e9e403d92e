#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "carmsim/error.hpp"
#include "carmsim/image_io.hpp"
#include "carmsim/metrics.hpp"
#include "carmsim/rng.hpp"
#include "support.hpp"

using namespace carmsim;

namespace {

const std::vector<int> kKs{1, 2, 3};

Rational r(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

DatasetRecord record(const std::string& id, std::vector<int> truth) {
    DatasetRecord rec;
    rec.record_id = id;
    rec.ranked.indices = std::move(truth);
    rec.ranked.distances_mm.assign(rec.ranked.indices.size(), 0.0);
    return rec;
}

}  // namespace

TEST(Retrieval, PerfectPredictionOptima) {
    const std::vector<int> g{4, 2, 10};
    const auto s = score_retrieval(g, g, kKs);
    for (int k : kKs) EXPECT_EQ(s.precision_at.at(k), r(1));
    EXPECT_EQ(s.recall_at.at(1), r(1, 3));
    EXPECT_EQ(s.recall_at.at(2), r(2, 3));
    EXPECT_EQ(s.recall_at.at(3), r(1));
    for (int k : kKs) EXPECT_EQ(s.hit_at.at(k), r(1));
}

TEST(Retrieval, PartialAndDisjoint) {
    // G = {A, B, C}, P2 = [A, D]
    const auto s = score_retrieval(std::vector<int>{1, 5}, std::vector<int>{1, 2, 3}, std::vector<int>{2});
    EXPECT_EQ(s.precision_at.at(2), r(1, 2));
    EXPECT_EQ(s.recall_at.at(2), r(1, 3));
    EXPECT_EQ(s.hit_at.at(2), r(1));
    const auto d = score_retrieval(std::vector<int>{7, 8, 9}, std::vector<int>{1, 2, 3}, kKs);
    for (int k : kKs) {
        EXPECT_EQ(d.precision_at.at(k), r(0));
        EXPECT_EQ(d.recall_at.at(k), r(0));
        EXPECT_EQ(d.hit_at.at(k), r(0));
    }
}

TEST(Retrieval, InputErrors) {
    EXPECT_THROW(score_retrieval(std::vector<int>{1, 1}, std::vector<int>{1, 2, 3}, kKs), Error);
    EXPECT_THROW(score_retrieval(std::vector<int>{1}, std::vector<int>{}, kKs), Error);
    EXPECT_THROW(score_retrieval(std::vector<int>{1}, std::vector<int>{1}, std::vector<int>{0}), Error);
}

TEST(Retrieval, MatchesBruteForceSetArithmetic) {
    auto rng = make_engine(10, "metrics");
    std::vector<int> all(14);
    std::iota(all.begin(), all.end(), 1);
    const std::vector<int> ks{1, 2, 3, 5, 14};
    for (int n = 0; n < 10000; ++n) {
        std::shuffle(all.begin(), all.end(), rng);
        const std::size_t gs = 1 + rng() % 5;
        std::vector<int> g(all.begin(), all.begin() + static_cast<long>(gs));
        std::shuffle(all.begin(), all.end(), rng);
        const std::size_t ps = rng() % 8;
        std::vector<int> p(all.begin(), all.begin() + static_cast<long>(ps));
        const auto s = score_retrieval(p, g, ks);
        Rational prev_recall(0), prev_hit(0);
        for (int k : ks) {
            std::set<int> pk(p.begin(), p.begin() + static_cast<long>(std::min<std::size_t>(k, p.size())));
            std::set<int> gset(g.begin(), g.end());
            std::vector<int> inter;
            std::set_intersection(pk.begin(), pk.end(), gset.begin(), gset.end(), std::back_inserter(inter));
            const auto hits = static_cast<std::int64_t>(inter.size());
            ASSERT_EQ(s.precision_at.at(k), Rational(hits, k));
            ASSERT_EQ(s.recall_at.at(k), Rational(hits, static_cast<std::int64_t>(g.size())));
            ASSERT_EQ(s.hit_at.at(k), Rational(hits > 0 ? 1 : 0));
            ASSERT_GE(s.recall_at.at(k), prev_recall);
            ASSERT_GE(s.hit_at.at(k), prev_hit);
            ASSERT_GE(s.hit_at.at(k), s.recall_at.at(k) * static_cast<std::int64_t>(g.size()) / k);
            prev_recall = s.recall_at.at(k);
            prev_hit = s.hit_at.at(k);
        }
        ASSERT_EQ(s.precision_at.at(1), s.recall_at.at(1) * static_cast<std::int64_t>(g.size()));
    }
}

TEST(Corpus, SwappedSlotsFixture) {
    // Ten records; predictions swap slots 2 and 3 of the truth.
    std::vector<DatasetRecord> manifest;
    std::vector<Prediction> preds;
    for (int i = 0; i < 10; ++i) {
        const std::vector<int> g{1 + i % 14, 1 + (i + 3) % 14, 1 + (i + 7) % 14};
        manifest.push_back(record("r" + std::to_string(i), g));
        preds.push_back({"r" + std::to_string(i), {g[0], g[2], g[1]}, true});
    }
    const auto s = score_corpus(manifest, preds, kKs);
    EXPECT_EQ(s.mean.precision_at.at(1), r(1));
    EXPECT_EQ(s.mean.precision_at.at(2), r(1));  // still inside G
    EXPECT_EQ(s.mean.precision_at.at(3), r(1));
    EXPECT_EQ(s.mean.recall_at.at(2), r(2, 3));

    // Swapping a truth slot with an outsider is what P@2 penalizes.
    for (auto& p : preds) p.ranked[1] = 1 + (p.ranked[0] + 4) % 14;
    const auto t = score_corpus(manifest, preds, kKs);
    EXPECT_EQ(t.mean.precision_at.at(2), r(1, 2));
    EXPECT_EQ(t.mean.precision_at.at(3), r(2, 3));
}

TEST(Corpus, AlignmentErrorsListIds) {
    std::vector<DatasetRecord> manifest{record("a", {1, 2, 3}), record("b", {1, 2, 3})};
    std::vector<Prediction> preds{{"a", {1}, true}, {"c", {1}, true}};
    try {
        score_corpus(manifest, preds, kKs);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::alignment);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("missing: b"), std::string::npos);
        EXPECT_NE(msg.find("extra: c"), std::string::npos);
    }
}

TEST(Corpus, ConstantPredictorConcentratesInOneColumn) {
    const auto& p = fixture::phantom();
    auto rng = make_engine(12, "t1");
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<DatasetRecord> manifest;
    std::vector<Prediction> preds;
    for (int i = 0; i < 300; ++i) {
        const Vec3 q = p.volume.extent().cwiseProduct(Vec3(u(rng), u(rng), u(rng)));
        manifest.push_back(record("r" + std::to_string(i), nearest_k(q, p.landmarks, 3).indices));
        preds.push_back({"r" + std::to_string(i), {10}, true});
    }
    const auto s = score_corpus(manifest, preds, kKs);
    std::int64_t column = 0;
    for (int row = 0; row < kLandmarkCount; ++row) {
        for (int c = 0; c < kLandmarkCount; ++c) {
            if (c != 9) {
                EXPECT_EQ(s.confusion.counts[row][c], 0);
            }
        }
        column += s.confusion.counts[row][9];
    }
    EXPECT_EQ(column, 300);
    EXPECT_EQ(s.confusion.total(), 300);
}

TEST(Corpus, RowSumsEqualPerLandmarkCounts) {
    std::vector<DatasetRecord> manifest;
    std::vector<Prediction> preds;
    std::array<std::int64_t, kLandmarkCount> per{};
    auto rng = make_engine(13, "rows");
    for (int i = 0; i < 200; ++i) {
        const int t = 1 + static_cast<int>(rng() % 14);
        manifest.push_back(record(std::to_string(i), {t}));
        ++per[t - 1];
        Prediction p{std::to_string(i), {}, true};
        if (rng() % 4) p.ranked.push_back(1 + static_cast<int>(rng() % 14));
        preds.push_back(p);
    }
    const auto s = score_corpus(manifest, preds, std::vector<int>{1});
    for (int i = 1; i <= kLandmarkCount; ++i) EXPECT_EQ(s.confusion.row_total(i), per[i - 1]);
}

TEST(Corpus, PredictionFileFormatsAndExports) {
    const auto dir = fixture::scratch("predictions");
    std::ofstream(dir / "p.jsonl") << R"({"record_id":"a","ranked":[1,"t1","Right Scapula"]})" << "\n"
                                   << R"({"record_id":"b","text":"[1: Skull, 10: T1, 11: Sternum]"})" << "\n"
                                   << R"({"record_id":"c","text":"no idea"})" << "\n";
    const auto& schema = LandmarkSchema::default_schema();
    const auto preds = load_predictions(dir / "p.jsonl", schema);
    ASSERT_EQ(preds.size(), 3u);
    EXPECT_EQ(preds[0].ranked, (std::vector<int>{1, 10, 4}));
    EXPECT_EQ(preds[1].ranked, (std::vector<int>{1, 10, 11}));
    EXPECT_FALSE(preds[2].parsed);
    std::vector<DatasetRecord> manifest{record("a", {1, 10, 4}), record("b", {1, 10, 11}), record("c", {1, 2, 3})};
    const auto s = score_corpus(manifest, preds, kKs);
    EXPECT_EQ(s.unparsed, 1u);
    EXPECT_EQ(s.mean.precision_at.at(1), r(2, 3));
    EXPECT_EQ(s.confusion.abstained[0], 1);
    write_confusion_png(dir / "h.png", s.confusion);
    write_confusion_csv(dir / "h.csv", s.confusion, schema);
    std::ifstream png(dir / "h.png", std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(png)), std::istreambuf_iterator<char>());
    const auto img = decode_png(bytes);
    EXPECT_EQ(img.width, 14 * 16);
    std::ifstream csv(dir / "h.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header.rfind("true\\predicted,Skull,", 0), 0u);

    std::ofstream(dir / "bad.jsonl") << R"({"record_id":"a","ranked":[99]})" << "\n";
    EXPECT_THROW(load_predictions(dir / "bad.jsonl", schema), Error);
}

TEST(Navigation, Summary) {
    EXPECT_THROW(summarize_navigation({}), Error);
    std::vector<EpisodeTrace> traces(4);
    traces[0].outcome = Outcome::success;
    traces[0].steps.resize(3);
    traces[0].final_distance_mm = 10;
    traces[1].outcome = Outcome::success;
    traces[1].steps.resize(5);
    traces[1].final_distance_mm = 20;
    traces[2].outcome = Outcome::max_steps;
    traces[2].final_distance_mm = 100;
    traces[3].outcome = Outcome::agent_error;
    traces[3].final_distance_mm = 70;
    const auto s = summarize_navigation(traces);
    EXPECT_EQ(s.successes, 2u);
    EXPECT_DOUBLE_EQ(s.success_rate, 0.5);
    EXPECT_DOUBLE_EQ(*s.mean_steps_to_success, 4.0);
    EXPECT_DOUBLE_EQ(s.mean_final_distance_mm, 50.0);
}

TEST(Navigation, ZeroMoveSuccessRateEqualsStartsInsideRadius) {
    const auto& p = fixture::phantom();
    ZeroMoveAgent agent;
    std::vector<EpisodeTrace> traces;
    int inside = 0;
    for (int start = 1; start <= 14; ++start) {
        EpisodeConfig c;
        c.start = start;
        c.target = 10;
        c.max_steps = 1;
        c.geometry.cols = c.geometry.rows = 8;
        traces.push_back(run_episode(p.volume, p.landmarks, agent, c));
        if (in_plane_distance(p.landmarks.at(start).position, p.landmarks.at(10).position) <= 25.0) ++inside;
    }
    EXPECT_DOUBLE_EQ(summarize_navigation(traces).success_rate, inside / 14.0);
}
