#include "carmsim/landmarks.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>

#include <json.hpp>

#include "carmsim/error.hpp"

namespace carmsim {
namespace {

using nlohmann::json;

constexpr const char* kLandmarkFormat = "carmsim.landmarks";

LandmarkName paired(int index, const std::string& side, const std::string& base,
                    const std::vector<std::string>& suffixes) {
    LandmarkName n;
    n.index = index;
    n.canonical_name = side + " " + base;
    for (const auto& s : suffixes) n.variants.push_back(side + " " + s);
    std::string slug = n.canonical_name;
    std::transform(slug.begin(), slug.end(), slug.begin(), [](unsigned char c) {
        return c == ' ' ? '_' : static_cast<char>(std::tolower(c));
    });
    n.slug = slug;
    return n;
}

std::vector<LandmarkName> default_names() {
    std::vector<LandmarkName> t;
    t.push_back({1, "Skull", {"Skull", "Cranium", "Cranial vault", "Calvarium"}, "skull"});
    t.push_back(paired(2, "Right", "Humeral Head", {"Humeral Head", "Humerus Head", "Proximal Humerus"}));
    t.push_back(paired(3, "Left", "Humeral Head", {"Humeral Head", "Humerus Head", "Proximal Humerus"}));
    t.push_back(paired(4, "Right", "Scapula", {"Scapula", "Shoulder Blade", "Scapular Body"}));
    t.push_back(paired(5, "Left", "Scapula", {"Scapula", "Shoulder Blade", "Scapular Body"}));
    t.push_back(paired(6, "Right", "Elbow", {"Elbow", "Elbow Joint", "Olecranon"}));
    t.push_back(paired(7, "Left", "Elbow", {"Elbow", "Elbow Joint", "Olecranon"}));
    t.push_back(paired(8, "Right", "Wrist", {"Wrist", "Wrist Joint", "Radiocarpal Joint"}));
    t.push_back(paired(9, "Left", "Wrist", {"Wrist", "Wrist Joint", "Radiocarpal Joint"}));
    t.push_back({10, "T1", {"T1", "T1 Vertebra", "First Thoracic Vertebra"}, "t1"});
    t.push_back({11, "Sternum", {"Sternum", "Breastbone", "Sternal Body"}, "sternum"});
    t.push_back(paired(12, "Right", "Hemidiaphragm", {"Hemidiaphragm", "Diaphragm", "Diaphragmatic Dome"}));
    t.push_back(paired(13, "Left", "Hemidiaphragm", {"Hemidiaphragm", "Diaphragm", "Diaphragmatic Dome"}));
    t.push_back({14, "L1", {"L1", "L1 Vertebra", "First Lumbar Vertebra"}, "l1"});
    return t;
}

// A name must survive the bracketed label format and the XML-ish protocol.
bool name_is_wire_safe(const std::string& name) {
    return !name.empty() && name.find_first_of(",[]:<>&\"\n\r") == std::string::npos;
}

enum class Side { none, right, left };

Side side_of(const std::string& canonical) {
    const auto norm = normalize_name(canonical);
    if (norm.rfind("right ", 0) == 0) return Side::right;
    if (norm.rfind("left ", 0) == 0) return Side::left;
    return Side::none;
}

void check_landmarks(const std::vector<Landmark>& landmarks) {
    if (landmarks.size() != kLandmarkCount) {
        throw Error(ErrorKind::validation, "cardinality: expected 14 landmarks, got " + std::to_string(landmarks.size()));
    }
    std::set<int> seen;
    for (const auto& lm : landmarks) {
        if (lm.index < 1 || lm.index > kLandmarkCount) {
            throw Error(ErrorKind::validation, "index " + std::to_string(lm.index) + " outside 1..14");
        }
        if (!seen.insert(lm.index).second) {
            throw Error(ErrorKind::validation, "duplicate index " + std::to_string(lm.index));
        }
        if (lm.variants.empty() ||
            std::find(lm.variants.begin(), lm.variants.end(), lm.canonical_name) == lm.variants.end()) {
            throw Error(ErrorKind::validation,
                        "landmark " + std::to_string(lm.index) + ": variants must include the canonical name");
        }
        for (const auto& v : lm.variants) {
            if (!name_is_wire_safe(v)) {
                throw Error(ErrorKind::validation, "landmark name '" + v + "' contains reserved characters");
            }
        }
        if (!lm.position.allFinite()) {
            throw Error(ErrorKind::validation, "landmark " + std::to_string(lm.index) + " has a non-finite position");
        }
    }
}

}  // namespace

std::string normalize_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : name) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

LandmarkSchema::LandmarkSchema(std::vector<LandmarkName> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    if (names_.size() != kLandmarkCount) {
        throw Error(ErrorKind::config, "landmark schema must have 14 entries");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].index != static_cast<int>(i) + 1) {
            throw Error(ErrorKind::config, "landmark schema indices must be exactly 1..14");
        }
        if (std::find(names_[i].variants.begin(), names_[i].variants.end(), names_[i].canonical_name) ==
            names_[i].variants.end()) {
            throw Error(ErrorKind::config, "variants of '" + names_[i].canonical_name + "' omit the canonical name");
        }
        for (const auto& v : names_[i].variants) {
            if (!name_is_wire_safe(v)) {
                throw Error(ErrorKind::config, "landmark name '" + v + "' contains reserved characters");
            }
            if (!seen.insert(normalize_name(v)).second) {
                throw Error(ErrorKind::config, "landmark name '" + v + "' is registered twice");
            }
        }
    }
}

const LandmarkSchema& LandmarkSchema::default_schema() {
    static const LandmarkSchema schema(default_names());
    return schema;
}

const LandmarkName& LandmarkSchema::at(int index) const {
    if (index < 1 || index > kLandmarkCount) {
        throw Error(ErrorKind::input, "landmark index " + std::to_string(index) + " outside 1..14");
    }
    return names_[static_cast<std::size_t>(index - 1)];
}

std::optional<int> LandmarkSchema::resolve(std::string_view name) const {
    const auto key = normalize_name(name);
    if (key.empty()) return std::nullopt;
    for (const auto& n : names_) {
        for (const auto& v : n.variants) {
            if (normalize_name(v) == key) return n.index;
        }
    }
    return std::nullopt;
}

std::optional<int> LandmarkSchema::resolve_token(std::string_view token) const {
    int value = 0;
    const auto* end = token.data() + token.size();
    if (auto [p, ec] = std::from_chars(token.data(), end, value); ec == std::errc{} && p == end) {
        if (value >= 1 && value <= kLandmarkCount) return value;
        return std::nullopt;
    }
    const auto key = normalize_name(token);
    for (const auto& n : names_) {
        if (key == n.slug) return n.index;
    }
    return resolve(token);
}

LandmarkSet::LandmarkSet(std::vector<Landmark> landmarks) : landmarks_(std::move(landmarks)) {
    check_landmarks(landmarks_);
    std::sort(landmarks_.begin(), landmarks_.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
}

const Landmark& LandmarkSet::at(int index) const {
    if (index < 1 || index > kLandmarkCount) {
        throw Error(ErrorKind::input, "landmark index " + std::to_string(index) + " outside 1..14");
    }
    return landmarks_[static_cast<std::size_t>(index - 1)];
}

void LandmarkSet::validate_within(const Box3& bounds) const {
    const double midline = bounds.center().x();
    for (const auto& lm : landmarks_) {
        for (int a = 0; a < 3; ++a) {
            if (lm.position[a] < bounds.min()[a] || lm.position[a] > bounds.max()[a]) {
                throw Error(ErrorKind::validation,
                            "landmark " + std::to_string(lm.index) + " lies outside the volume extent");
            }
        }
        const Side side = side_of(lm.canonical_name);
        if ((side == Side::right && !(lm.position.x() < midline)) ||
            (side == Side::left && !(lm.position.x() > midline))) {
            throw Error(ErrorKind::validation,
                        "landmark " + std::to_string(lm.index) + " is on the wrong side of the LR midline");
        }
    }
}

LandmarkSchema LandmarkSet::schema() const {
    const auto& defaults = LandmarkSchema::default_schema();
    std::vector<LandmarkName> names;
    for (const auto& lm : landmarks_) {
        names.push_back({lm.index, lm.canonical_name, lm.variants, defaults.at(lm.index).slug});
    }
    return LandmarkSchema(std::move(names));
}

void save_landmarks(const LandmarkSet& set, const std::filesystem::path& path, const std::optional<Box3>& bounds) {
    json doc;
    doc["format"] = kLandmarkFormat;
    doc["version"] = 1;
    if (bounds) {
        const Vec3 e = bounds->max();
        doc["extent_mm"] = {e.x(), e.y(), e.z()};
    }
    json list = json::array();
    for (const auto& lm : set.landmarks()) {
        list.push_back({{"index", lm.index},
                        {"canonical_name", lm.canonical_name},
                        {"variants", lm.variants},
                        {"position_mm", {lm.position.x(), lm.position.y(), lm.position.z()}}});
    }
    doc["landmarks"] = std::move(list);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

LandmarkSet load_landmarks(const std::filesystem::path& path, const std::optional<Box3>& bounds) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open landmarks " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
    std::vector<Landmark> landmarks;
    std::optional<Box3> check = bounds;
    try {
        if (doc.value("format", std::string{}) != kLandmarkFormat) {
            throw Error(ErrorKind::parse, path.string() + ": format field must be 'carmsim.landmarks'");
        }
        if (!check && doc.contains("extent_mm")) {
            const auto e = doc.at("extent_mm").get<std::vector<double>>();
            if (e.size() != 3) throw Error(ErrorKind::validation, "extent_mm must have three components");
            check = Box3(Vec3::Zero(), Vec3(e[0], e[1], e[2]));
        }
        for (const auto& item : doc.at("landmarks")) {
            Landmark lm;
            lm.index = item.at("index").get<int>();
            lm.canonical_name = item.at("canonical_name").get<std::string>();
            lm.variants = item.at("variants").get<std::vector<std::string>>();
            const auto p = item.at("position_mm").get<std::vector<double>>();
            if (p.size() != 3) throw Error(ErrorKind::validation, "position_mm must have three components");
            lm.position = Vec3(p[0], p[1], p[2]);
            landmarks.push_back(std::move(lm));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
    LandmarkSet set(std::move(landmarks));
    if (check) set.validate_within(*check);
    return set;
}

}  // namespace carmsim
