#include "carmsim/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "carmsim/image_io.hpp"
#include "carmsim/rng.hpp"

namespace carmsim {
namespace {

using nlohmann::json;

class LabelScanner {
public:
    explicit LabelScanner(std::string_view text) : text_(text) {}

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    std::size_t pos() const { return pos_; }
    void advance() { ++pos_; }

    bool consume(char c) {
        skip_space();
        if (peek() != c) return false;
        ++pos_;
        return true;
    }

    std::optional<int> integer() {
        skip_space();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            value = value * 10 + (text_[pos_] - '0');
            if (value > 1'000'000) return std::nullopt;
            ++pos_;
        }
        if (pos_ == start) return std::nullopt;
        return static_cast<int>(value);
    }

    std::string_view until_any(std::string_view stops) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && stops.find(text_[pos_]) == std::string_view::npos) ++pos_;
        return text_.substr(start, pos_ - start);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string format_distance(double d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", d);
    return buf;
}

}  // namespace

RankedLandmarks nearest_k(const Vec3& point, const LandmarkSet& set, int k) {
    if (k < 1 || k > kLandmarkCount) {
        throw Error(ErrorKind::input, "nearest_k: k must lie in 1..14");
    }
    struct Candidate {
        double distance;
        int index;
    };
    std::vector<Candidate> all;
    all.reserve(kLandmarkCount);
    for (const auto& lm : set.landmarks()) {
        all.push_back({(lm.position - point).norm(), lm.index});
    }
    std::partial_sort(all.begin(), all.begin() + k, all.end(), [](const Candidate& a, const Candidate& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });
    RankedLandmarks ranked;
    for (int i = 0; i < k; ++i) {
        ranked.indices.push_back(all[static_cast<std::size_t>(i)].index);
        ranked.distances_mm.push_back(all[static_cast<std::size_t>(i)].distance);
    }
    return ranked;
}

namespace {

std::vector<std::string> draw_names(const RankedLandmarks& ranked, const LandmarkSet& set, std::uint64_t seed) {
    std::vector<std::string> names;
    for (std::size_t slot = 0; slot < ranked.indices.size(); ++slot) {
        const auto& variants = set.at(ranked.indices[slot]).variants;
        auto rng = make_engine(seed, "variant", slot);
        std::uniform_int_distribution<std::size_t> pick(0, variants.size() - 1);
        names.push_back(variants[pick(rng)]);
    }
    return names;
}

std::string join_label(const RankedLandmarks& ranked, const std::vector<std::string>& names) {
    std::string out = "[";
    for (std::size_t slot = 0; slot < ranked.indices.size(); ++slot) {
        if (slot) out += ", ";
        out += std::to_string(ranked.indices[slot]) + ": " + names[slot];
    }
    out += "]";
    return out;
}

}  // namespace

std::string format_label(const RankedLandmarks& ranked, const LandmarkSet& set, std::uint64_t variant_seed) {
    return join_label(ranked, draw_names(ranked, set, variant_seed));
}

LabelParseResult parse_label(std::string_view text, const LandmarkSchema& schema, std::size_t expected_count) {
    LabelScanner s(text);
    RankedLandmarks ranked;
    if (!s.consume('[')) return ParseError{s.pos(), "expected '['"};
    s.skip_space();
    if (s.peek() == ']') return ParseError{s.pos(), "empty landmark list"};
    while (true) {
        s.skip_space();
        const std::size_t entry_pos = s.pos();
        const auto index = s.integer();
        if (!index) return ParseError{s.pos(), "expected landmark index"};
        if (*index < 1 || *index > kLandmarkCount) {
            return ParseError{entry_pos, "landmark index " + std::to_string(*index) + " outside 1..14"};
        }
        if (!s.consume(':')) return ParseError{s.pos(), "expected ':' after index"};
        s.skip_space();
        const std::size_t name_pos = s.pos();
        const auto name = s.until_any(",]");
        if (s.at_end()) return ParseError{s.pos(), "unterminated landmark list"};
        const auto resolved = schema.resolve(name);
        if (!resolved) {
            return ParseError{name_pos, "unknown landmark name '" + normalize_name(name) + "'"};
        }
        if (*resolved != *index) {
            return ParseError{name_pos, "name resolves to landmark " + std::to_string(*resolved) + ", not " +
                                            std::to_string(*index)};
        }
        if (std::find(ranked.indices.begin(), ranked.indices.end(), *index) != ranked.indices.end()) {
            return ParseError{entry_pos, "duplicate landmark index " + std::to_string(*index)};
        }
        ranked.indices.push_back(*index);
        if (s.peek() == ']') {
            s.advance();
            break;
        }
        s.advance();  // ','
    }
    s.skip_space();
    if (!s.at_end()) return ParseError{s.pos(), "trailing characters after ']'"};
    if (expected_count != 0 && ranked.indices.size() != expected_count) {
        return ParseError{0, "arity: expected " + std::to_string(expected_count) + " landmarks, got " +
                                 std::to_string(ranked.indices.size())};
    }
    return ranked;
}

std::string_view to_string(Split split) noexcept { return split == Split::train ? "train" : "test"; }

SplitCounts dataset_counts(const std::vector<std::string>& train_volumes, const std::vector<std::string>& test_volumes,
                           int per_volume) {
    if (per_volume < 1) throw Error(ErrorKind::config, "per_volume must be >= 1");
    const std::set<std::string> train(train_volumes.begin(), train_volumes.end());
    const std::set<std::string> test(test_volumes.begin(), test_volumes.end());
    if (train.size() != train_volumes.size() || test.size() != test_volumes.size()) {
        throw Error(ErrorKind::config, "volume id listed twice within a split");
    }
    for (const auto& id : test) {
        if (train.count(id)) throw Error(ErrorKind::config, "volume '" + id + "' appears in both train and test");
    }
    return {train.size() * static_cast<std::size_t>(per_volume), test.size() * static_cast<std::size_t>(per_volume)};
}

std::string manifest_line(const DatasetRecord& r) {
    json ranked = json::array();
    for (std::size_t i = 0; i < r.ranked.indices.size(); ++i) {
        json entry{{"index", r.ranked.indices[i]}};
        entry["name"] = i < r.ranked_names.size() ? r.ranked_names[i] : std::string{};
        if (i < r.ranked.distances_mm.size()) {
            entry["distance_mm"] = json::parse(format_distance(r.ranked.distances_mm[i]));
        }
        ranked.push_back(std::move(entry));
    }
    json doc;
    doc["record_id"] = r.record_id;
    doc["volume_id"] = r.volume_id;
    doc["sample_id"] = r.sample_id;
    doc["split"] = std::string(to_string(r.split));
    doc["image_path"] = r.image_path;
    doc["isocenter_mm"] = {json::parse(format_distance(r.isocenter.x())), json::parse(format_distance(r.isocenter.y())),
                           json::parse(format_distance(r.isocenter.z()))};
    doc["ranked"] = std::move(ranked);
    doc["label_text"] = r.label_text;
    doc["prompt_template_id"] = r.prompt_template_id;
    return doc.dump();
}

DatasetRecord parse_manifest_line(std::string_view line) {
    DatasetRecord r;
    try {
        const auto doc = json::parse(line);
        r.record_id = doc.at("record_id").get<std::string>();
        r.volume_id = doc.at("volume_id").get<std::string>();
        r.sample_id = doc.at("sample_id").get<int>();
        const auto split = doc.at("split").get<std::string>();
        if (split != "train" && split != "test") throw Error(ErrorKind::parse, "unknown split '" + split + "'");
        r.split = split == "train" ? Split::train : Split::test;
        r.image_path = doc.value("image_path", std::string{});
        const auto iso = doc.at("isocenter_mm").get<std::vector<double>>();
        if (iso.size() != 3) throw Error(ErrorKind::parse, "isocenter_mm must have three components");
        r.isocenter = Vec3(iso[0], iso[1], iso[2]);
        for (const auto& e : doc.at("ranked")) {
            r.ranked.indices.push_back(e.at("index").get<int>());
            r.ranked_names.push_back(e.value("name", std::string{}));
            if (e.contains("distance_mm")) r.ranked.distances_mm.push_back(e.at("distance_mm").get<double>());
        }
        r.label_text = doc.at("label_text").get<std::string>();
        r.prompt_template_id = doc.value("prompt_template_id", std::string{});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, std::string("manifest record: ") + e.what());
    }
    return r;
}

std::vector<DatasetRecord> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open manifest " + path.string());
    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(parse_manifest_line(line));
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

DatasetSummary build_dataset(const std::vector<DatasetSource>& sources, const DatasetConfig& config,
                             const std::filesystem::path& out_dir) {
    std::vector<std::string> train_ids, test_ids;
    for (const auto& s : sources) (s.split == Split::train ? train_ids : test_ids).push_back(s.volume_id);
    const SplitCounts counts = dataset_counts(train_ids, test_ids, config.per_volume);
    if (config.ranked_count < 1 || config.ranked_count > kLandmarkCount) {
        throw Error(ErrorKind::config, "ranked_count must lie in 1..14");
    }
    config.geometry.validate();

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
    const auto manifest_path = out_dir / "manifest.jsonl";
    std::ofstream manifest(manifest_path, std::ios::binary);
    if (!manifest) throw Error(ErrorKind::io, "cannot write " + manifest_path.string());

    for (const auto& source : sources) {
        auto [volume, landmarks] = source.load();
        landmarks.validate_within(volume.bounds());

        SamplerConfig sampler = config.sampler;
        sampler.seed = derive_seed(config.seed, "sampler:" + source.volume_id);
        const auto samples = sample_isocenters(volume, static_cast<std::size_t>(config.per_volume), sampler,
                                               config.geometry);

        for (int sample_id = 0; sample_id < config.per_volume; ++sample_id) {
            const CArmPose& pose = samples.poses[static_cast<std::size_t>(sample_id)];
            DatasetRecord record;
            record.volume_id = source.volume_id;
            record.sample_id = sample_id;
            record.split = source.split;
            char id[32];
            std::snprintf(id, sizeof id, "%05d", sample_id);
            record.record_id = source.volume_id + "/" + id;
            record.image_path = "images/" + source.volume_id + "/" + id + ".png";
            record.isocenter = pose.isocenter;
            record.ranked = nearest_k(pose.isocenter, landmarks, config.ranked_count);
            record.ranked_names =
                draw_names(record.ranked, landmarks, derive_seed(config.seed, "label:" + source.volume_id, sample_id));
            record.label_text = join_label(record.ranked, record.ranked_names);
            record.prompt_template_id = config.prompt_template_id;

            if (config.write_images) {
                try {
                    write_png(out_dir / record.image_path, render(volume, pose, config.render));
                } catch (const Error& e) {
                    throw Error(e.kind(), record.record_id + " (" + (out_dir / record.image_path).string() + "): " +
                                              e.what());
                }
            }
            manifest << manifest_line(record) << '\n';
        }
        if (!manifest) throw Error(ErrorKind::io, "write failed on " + manifest_path.string());
    }
    return {counts, manifest_path};
}

}  // namespace carmsim
