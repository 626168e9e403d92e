#include "carmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "carmsim/error.hpp"
#include "carmsim/image_io.hpp"

namespace carmsim {

RetrievalScore score_retrieval(std::span<const int> predictions, std::span<const int> truth,
                               std::span<const int> ks) {
    std::set<int> seen;
    for (int p : predictions) {
        if (!seen.insert(p).second) throw Error(ErrorKind::input, "duplicate prediction " + std::to_string(p));
    }
    const std::set<int> g(truth.begin(), truth.end());
    if (g.empty()) throw Error(ErrorKind::input, "ground truth set is empty");
    if (g.size() != truth.size()) throw Error(ErrorKind::input, "duplicate ground-truth index");

    RetrievalScore score;
    for (int k : ks) {
        if (k < 1) throw Error(ErrorKind::input, "K must be at least 1");
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), predictions.size());
        std::int64_t hits = 0;
        for (std::size_t i = 0; i < take; ++i) hits += g.count(predictions[i]);
        score.precision_at[k] = Rational(hits, k);
        score.recall_at[k] = Rational(hits, static_cast<std::int64_t>(g.size()));
        score.hit_at[k] = Rational(hits >= 1 ? 1 : 0);
    }
    return score;
}

void ConfusionMatrix::add(int true_index, std::optional<int> predicted_index) {
    if (true_index < 1 || true_index > kLandmarkCount) {
        throw Error(ErrorKind::input, "true landmark index out of range: " + std::to_string(true_index));
    }
    if (!predicted_index) {
        ++abstained[true_index - 1];
        return;
    }
    if (*predicted_index < 1 || *predicted_index > kLandmarkCount) {
        throw Error(ErrorKind::input, "predicted landmark index out of range: " + std::to_string(*predicted_index));
    }
    ++counts[true_index - 1][*predicted_index - 1];
}

std::int64_t ConfusionMatrix::row_total(int true_index) const {
    const auto& row = counts.at(static_cast<std::size_t>(true_index - 1));
    std::int64_t sum = abstained.at(static_cast<std::size_t>(true_index - 1));
    for (auto c : row) sum += c;
    return sum;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t sum = 0;
    for (int i = 1; i <= kLandmarkCount; ++i) sum += row_total(i);
    return sum;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path, const LandmarkSchema& schema) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open predictions " + path.string());
    std::vector<Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        Prediction p;
        try {
            const json j = json::parse(line);
            p.record_id = j.at("record_id").get<std::string>();
            if (j.contains("ranked")) {
                for (const auto& item : j.at("ranked")) {
                    if (item.is_number_integer()) {
                        p.ranked.push_back(item.get<int>());
                        continue;
                    }
                    const auto resolved = schema.resolve_token(item.get<std::string>());
                    if (!resolved) throw Error(ErrorKind::parse, where + ": unknown landmark " + item.dump());
                    p.ranked.push_back(*resolved);
                }
                for (int idx : p.ranked) {
                    if (idx < 1 || idx > kLandmarkCount) {
                        throw Error(ErrorKind::parse, where + ": landmark index out of range: " + std::to_string(idx));
                    }
                }
            } else if (j.contains("text")) {
                auto parsed = parse_label(j.at("text").get<std::string>(), schema, 0);
                if (auto* ranked = std::get_if<RankedLandmarks>(&parsed)) {
                    p.ranked = ranked->indices;
                } else {
                    p.parsed = false;
                }
            } else {
                throw Error(ErrorKind::parse, where + ": needs a 'ranked' or 'text' field");
            }
        } catch (const json::exception& e) {
            throw Error(ErrorKind::parse, where + ": " + e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

CorpusScore score_corpus(const std::vector<DatasetRecord>& manifest, const std::vector<Prediction>& predictions,
                         std::span<const int> ks) {
    std::unordered_map<std::string, const Prediction*> by_id;
    std::vector<std::string> duplicated;
    for (const auto& p : predictions) {
        if (!by_id.emplace(p.record_id, &p).second) duplicated.push_back(p.record_id);
    }
    std::vector<std::string> missing;
    std::set<std::string> known;
    for (const auto& r : manifest) {
        known.insert(r.record_id);
        if (!by_id.count(r.record_id)) missing.push_back(r.record_id);
    }
    std::vector<std::string> extra;
    for (const auto& p : predictions) {
        if (!known.count(p.record_id)) extra.push_back(p.record_id);
    }
    if (!missing.empty() || !extra.empty() || !duplicated.empty()) {
        auto list = [](const std::vector<std::string>& ids) {
            std::string s;
            for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + ids[i];
            if (ids.size() > 20) s += ", ... (" + std::to_string(ids.size()) + " total)";
            return s;
        };
        std::string msg = "predictions do not align with manifest";
        if (!missing.empty()) msg += "; missing: " + list(missing);
        if (!extra.empty()) msg += "; extra: " + list(extra);
        if (!duplicated.empty()) msg += "; duplicated: " + list(duplicated);
        throw Error(ErrorKind::alignment, msg);
    }
    if (manifest.empty()) throw Error(ErrorKind::input, "manifest has no records");

    CorpusScore out;
    for (int k : ks) {
        out.mean.precision_at[k] = 0;
        out.mean.recall_at[k] = 0;
        out.mean.hit_at[k] = 0;
    }
    for (const auto& record : manifest) {
        const Prediction& p = *by_id.at(record.record_id);
        const auto s = score_retrieval(p.ranked, record.ranked.indices, ks);
        for (int k : ks) {
            out.mean.precision_at[k] += s.precision_at.at(k);
            out.mean.recall_at[k] += s.recall_at.at(k);
            out.mean.hit_at[k] += s.hit_at.at(k);
        }
        std::optional<int> top;
        if (!p.ranked.empty()) top = p.ranked.front();
        out.confusion.add(record.ranked.indices.front(), top);
        if (!p.parsed) ++out.unparsed;
    }
    out.records = manifest.size();
    const Rational n(static_cast<std::int64_t>(manifest.size()));
    for (int k : ks) {
        out.mean.precision_at[k] /= n;
        out.mean.recall_at[k] /= n;
        out.mean.hit_at[k] /= n;
    }
    return out;
}

void write_confusion_png(const std::filesystem::path& path, const ConfusionMatrix& matrix, int cell_px) {
    if (cell_px < 1) throw Error(ErrorKind::config, "cell size must be positive");
    GrayImage img;
    img.width = kLandmarkCount * cell_px;
    img.height = kLandmarkCount * cell_px;
    img.pixels.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height), 0);
    for (int r = 0; r < kLandmarkCount; ++r) {
        const auto total = matrix.row_total(r + 1);
        for (int c = 0; c < kLandmarkCount; ++c) {
            const double v = total > 0 ? static_cast<double>(matrix.counts[r][c]) / static_cast<double>(total) : 0.0;
            const auto level = quantize(v);
            for (int y = r * cell_px; y < (r + 1) * cell_px; ++y) {
                for (int x = c * cell_px; x < (c + 1) * cell_px; ++x) {
                    img.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) +
                               static_cast<std::size_t>(x)] = level;
                }
            }
        }
    }
    write_png(path, img);
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& matrix,
                         const LandmarkSchema& schema) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "true\\predicted";
    for (int c = 1; c <= kLandmarkCount; ++c) out << ',' << schema.at(c).canonical_name;
    out << ",abstained\n";
    for (int r = 1; r <= kLandmarkCount; ++r) {
        out << schema.at(r).canonical_name;
        for (int c = 1; c <= kLandmarkCount; ++c) out << ',' << matrix.counts[r - 1][c - 1];
        out << ',' << matrix.abstained[r - 1] << '\n';
    }
}

std::string score_report_json(const CorpusScore& score) {
    using nlohmann::json;
    auto table = [](const std::map<int, Rational>& m) {
        json j = json::object();
        for (const auto& [k, v] : m) {
            j[std::to_string(k)] = {{"value", to_double(v)},
                                    {"exact", std::to_string(v.numerator()) + "/" + std::to_string(v.denominator())}};
        }
        return j;
    };
    json j;
    j["records"] = score.records;
    j["unparsed"] = score.unparsed;
    j["precision_at"] = table(score.mean.precision_at);
    j["recall_at"] = table(score.mean.recall_at);
    j["hit_at"] = table(score.mean.hit_at);
    json rows = json::array();
    for (int r = 0; r < kLandmarkCount; ++r) {
        json row = json::array();
        for (int c = 0; c < kLandmarkCount; ++c) row.push_back(score.confusion.counts[r][c]);
        rows.push_back(std::move(row));
    }
    j["confusion"] = {{"counts", std::move(rows)}, {"abstained", score.confusion.abstained}};
    return j.dump(2);
}

NavigationSummary summarize_navigation(std::span<const EpisodeTrace> traces) {
    if (traces.empty()) throw Error(ErrorKind::input, "no traces to summarize");
    NavigationSummary s;
    s.episodes = traces.size();
    double steps = 0.0;
    double distance = 0.0;
    for (const auto& t : traces) {
        distance += t.final_distance_mm;
        if (t.outcome == Outcome::success) {
            ++s.successes;
            steps += static_cast<double>(t.steps.size());
        }
    }
    s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.episodes);
    if (s.successes > 0) s.mean_steps_to_success = steps / static_cast<double>(s.successes);
    s.mean_final_distance_mm = distance / static_cast<double>(s.episodes);
    return s;
}

}  // namespace carmsim
