#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "carmsim/dataset.hpp"
#include "carmsim/navloop.hpp"

namespace carmsim {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

/// Retrieval scores for one record or a macro mean over many. Values are
/// exact; round only when displaying.
struct RetrievalScore {
    std::map<int, Rational> precision_at;
    std::map<int, Rational> recall_at;
    std::map<int, Rational> hit_at;
};

/// P_K is the first K predictions (fewer if the list is shorter),
/// G the truth set. Precision divides by K, recall by |G|.
/// Throws Error{input} on duplicate predictions, empty G or K < 1.
RetrievalScore score_retrieval(std::span<const int> predictions, std::span<const int> truth,
                               std::span<const int> ks);

/// Rows are the true nearest landmark, columns the predicted top-1.
/// Records without a usable prediction count in `abstained`.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kLandmarkCount>, kLandmarkCount> counts{};
    std::array<std::int64_t, kLandmarkCount> abstained{};

    void add(int true_index, std::optional<int> predicted_index);
    std::int64_t row_total(int true_index) const;
    std::int64_t total() const;
};

struct Prediction {
    std::string record_id;
    std::vector<int> ranked;
    bool parsed = true;  // false when free-text output failed to parse
};

/// Line-delimited JSON: {"record_id": ..., "ranked": [indices or names]}
/// or {"record_id": ..., "text": "[i: name, ...]"}. Unparseable text yields
/// an empty prediction; malformed lines throw Error{parse}.
std::vector<Prediction> load_predictions(const std::filesystem::path& path, const LandmarkSchema& schema);

struct CorpusScore {
    RetrievalScore mean;
    ConfusionMatrix confusion;
    std::size_t records = 0;
    std::size_t unparsed = 0;
};

/// Macro mean over records in manifest order. Throws Error{alignment}
/// listing missing, extra or duplicated record ids.
CorpusScore score_corpus(const std::vector<DatasetRecord>& manifest, const std::vector<Prediction>& predictions,
                         std::span<const int> ks);

/// Row-normalized heatmap, one cell per (true, predicted) pair.
void write_confusion_png(const std::filesystem::path& path, const ConfusionMatrix& matrix, int cell_px = 16);
/// Count table with a header row of canonical names plus an abstained column.
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& matrix,
                         const LandmarkSchema& schema);

std::string score_report_json(const CorpusScore& score);

struct NavigationSummary {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    std::optional<double> mean_steps_to_success;
    double mean_final_distance_mm = 0.0;
};

/// Throws Error{input} on an empty list.
NavigationSummary summarize_navigation(std::span<const EpisodeTrace> traces);

}  // namespace carmsim
