#include "carmsim/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "carmsim/error.hpp"

namespace carmsim {
namespace {

using nlohmann::json;

constexpr const char* kHeaderFormat = "carmsim.volume";

std::string encoding_name(ScalarEncoding e) {
    switch (e) {
        case ScalarEncoding::float32: return "float32";
        case ScalarEncoding::float64: return "float64";
        case ScalarEncoding::int16: return "int16";
        case ScalarEncoding::uint16: return "uint16";
        case ScalarEncoding::uint8: return "uint8";
    }
    return "float32";
}

ScalarEncoding parse_encoding(const std::string& name) {
    if (name == "float32") return ScalarEncoding::float32;
    if (name == "float64") return ScalarEncoding::float64;
    if (name == "int16") return ScalarEncoding::int16;
    if (name == "uint16") return ScalarEncoding::uint16;
    if (name == "uint8") return ScalarEncoding::uint8;
    throw Error(ErrorKind::header, "unknown encoding '" + name + "'");
}

template <typename T>
T read_le(const unsigned char* p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* bytes = reinterpret_cast<unsigned char*>(&value);
        std::reverse(bytes, bytes + sizeof(T));
    }
    return value;
}

double decode_element(const unsigned char* p, ScalarEncoding e) {
    switch (e) {
        case ScalarEncoding::float32: return read_le<float>(p);
        case ScalarEncoding::float64: return read_le<double>(p);
        case ScalarEncoding::int16: return read_le<std::int16_t>(p);
        case ScalarEncoding::uint16: return read_le<std::uint16_t>(p);
        case ScalarEncoding::uint8: return *p;
    }
    return 0.0;
}

}  // namespace

Volume::Volume(std::array<int, 3> dims, Vec3 spacing_mm, std::vector<float> mu)
    : dims_(dims), spacing_(std::move(spacing_mm)), data_(std::move(mu)) {
    for (int a = 0; a < 3; ++a) {
        if (dims_[a] < 2) {
            throw Error(ErrorKind::validation, "volume dims must be >= 2 on every axis");
        }
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
            throw Error(ErrorKind::validation, "volume spacing must be positive and finite");
        }
    }
    const auto expected = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    if (data_.size() != expected) {
        throw Error(ErrorKind::payload, "volume has " + std::to_string(data_.size()) + " voxels, dims require " +
                                            std::to_string(expected));
    }
    for (float v : data_) {
        if (!std::isfinite(v) || v < 0.0f) {
            throw Error(ErrorKind::validation, "attenuation values must be finite and non-negative");
        }
    }
}

Vec3 Volume::extent() const noexcept {
    return Vec3(dims_[0] * spacing_[0], dims_[1] * spacing_[1], dims_[2] * spacing_[2]);
}

bool Volume::contains(const Vec3& p) const noexcept {
    const Vec3 e = extent();
    for (int a = 0; a < 3; ++a) {
        if (!(p[a] >= 0.0 && p[a] <= e[a])) return false;
    }
    return true;
}

double Volume::sample(const Vec3& p) const noexcept {
    const double u = p.x() / spacing_.x() - 0.5;
    const double v = p.y() / spacing_.y() - 0.5;
    const double w = p.z() / spacing_.z() - 0.5;
    const double fi = std::floor(u), fj = std::floor(v), fk = std::floor(w);
    if (fi < -1.0 || fj < -1.0 || fk < -1.0 || fi > dims_[0] - 1 || fj > dims_[1] - 1 || fk > dims_[2] - 1) {
        return 0.0;
    }
    const int i0 = static_cast<int>(fi), j0 = static_cast<int>(fj), k0 = static_cast<int>(fk);
    const double tx = u - fi, ty = v - fj, tz = w - fk;
    auto fetch = [&](int i, int j, int k) -> double {
        if (i < 0 || j < 0 || k < 0 || i >= dims_[0] || j >= dims_[1] || k >= dims_[2]) return 0.0;
        return at(i, j, k);
    };
    const double c00 = fetch(i0, j0, k0) * (1 - tx) + fetch(i0 + 1, j0, k0) * tx;
    const double c10 = fetch(i0, j0 + 1, k0) * (1 - tx) + fetch(i0 + 1, j0 + 1, k0) * tx;
    const double c01 = fetch(i0, j0, k0 + 1) * (1 - tx) + fetch(i0 + 1, j0, k0 + 1) * tx;
    const double c11 = fetch(i0, j0 + 1, k0 + 1) * (1 - tx) + fetch(i0 + 1, j0 + 1, k0 + 1) * tx;
    const double c0 = c00 * (1 - ty) + c10 * ty;
    const double c1 = c01 * (1 - ty) + c11 * ty;
    return c0 * (1 - tz) + c1 * tz;
}

bool Volume::operator==(const Volume& other) const {
    return dims_ == other.dims_ && spacing_ == other.spacing_ && data_ == other.data_;
}

std::size_t VolumeHeader::element_size() const noexcept {
    switch (encoding) {
        case ScalarEncoding::float32: return 4;
        case ScalarEncoding::float64: return 8;
        case ScalarEncoding::int16: return 2;
        case ScalarEncoding::uint16: return 2;
        case ScalarEncoding::uint8: return 1;
    }
    return 4;
}

double hounsfield_to_mu(double hu, double mu_water) noexcept {
    return std::max(0.0, mu_water * (1.0 + hu / 1000.0));
}

VolumeHeader read_volume_header(const std::filesystem::path& header_path) {
    std::ifstream in(header_path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open volume header " + header_path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::header, header_path.string() + ": " + e.what());
    }

    VolumeHeader h;
    try {
        if (doc.value("format", std::string{}) != kHeaderFormat) {
            throw Error(ErrorKind::header, "format field must be '" + std::string(kHeaderFormat) + "'");
        }
        const auto dims = doc.at("dims").get<std::vector<int>>();
        const auto spacing = doc.at("spacing_mm").get<std::vector<double>>();
        if (dims.size() != 3 || spacing.size() != 3) {
            throw Error(ErrorKind::header, "dims and spacing_mm must have three components");
        }
        for (int a = 0; a < 3; ++a) {
            if (dims[a] < 2) throw Error(ErrorKind::header, "dims must be >= 2");
            if (!(spacing[a] > 0.0)) throw Error(ErrorKind::header, "spacing_mm must be positive");
            h.dims[a] = dims[a];
            h.spacing_mm[a] = spacing[a];
        }
        h.encoding = parse_encoding(doc.value("encoding", std::string("float32")));
        const auto units = doc.value("units", std::string("attenuation"));
        if (units == "attenuation") {
            h.units = ValueUnits::attenuation;
        } else if (units == "hounsfield") {
            h.units = ValueUnits::hounsfield;
        } else {
            throw Error(ErrorKind::header, "unknown units '" + units + "'");
        }
        h.mu_water = doc.value("mu_water", kMuWater);
        if (!(h.mu_water > 0.0)) throw Error(ErrorKind::header, "mu_water must be positive");
        if (doc.contains("axes")) {
            const auto axes = doc.at("axes").get<std::vector<std::string>>();
            if (axes != std::vector<std::string>{"LR", "AP", "SI"}) {
                throw Error(ErrorKind::header, "axes must be [\"LR\", \"AP\", \"SI\"]");
            }
        }
        if (doc.value("byte_order", std::string("little")) != "little") {
            throw Error(ErrorKind::header, "only little-endian payloads are supported");
        }
        h.raw_file = doc.value("raw_file", std::string{});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::header, header_path.string() + ": " + e.what());
    }
    return h;
}

Volume load_volume(const std::filesystem::path& header_path, const std::filesystem::path& raw_path) {
    const VolumeHeader h = read_volume_header(header_path);
    std::filesystem::path payload = raw_path;
    if (payload.empty()) {
        if (h.raw_file.empty()) throw Error(ErrorKind::header, "header has no raw_file and no payload path given");
        payload = header_path.parent_path() / h.raw_file;
    }
    std::ifstream in(payload, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open volume payload " + payload.string());
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto count = static_cast<std::size_t>(h.dims[0]) * h.dims[1] * h.dims[2];
    const auto expected = count * h.element_size();
    if (bytes.size() != expected) {
        throw Error(ErrorKind::payload, payload.string() + ": payload is " + std::to_string(bytes.size()) +
                                            " bytes, header requires " + std::to_string(expected));
    }
    std::vector<float> mu(count);
    for (std::size_t n = 0; n < count; ++n) {
        double value = decode_element(bytes.data() + n * h.element_size(), h.encoding);
        if (!std::isfinite(value)) {
            throw Error(ErrorKind::payload, payload.string() + ": non-finite value at element " + std::to_string(n));
        }
        if (h.units == ValueUnits::hounsfield) {
            value = hounsfield_to_mu(value, h.mu_water);
        }
        mu[n] = static_cast<float>(std::max(0.0, value));
    }
    return Volume(h.dims, h.spacing_mm, std::move(mu));
}

std::filesystem::path save_volume(const Volume& volume, const std::filesystem::path& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    const auto header_path = dir / (stem + ".json");
    const auto raw_name = stem + ".raw";

    json doc;
    doc["format"] = kHeaderFormat;
    doc["version"] = 1;
    doc["dims"] = volume.dims();
    doc["spacing_mm"] = {volume.spacing().x(), volume.spacing().y(), volume.spacing().z()};
    doc["encoding"] = encoding_name(ScalarEncoding::float32);
    doc["units"] = "attenuation";
    doc["byte_order"] = "little";
    doc["axes"] = {"LR", "AP", "SI"};
    doc["mu_water"] = kMuWater;
    doc["raw_file"] = raw_name;

    std::ofstream header(header_path);
    if (!header) throw Error(ErrorKind::io, "cannot write " + header_path.string());
    header << doc.dump(2) << '\n';

    std::ofstream raw(dir / raw_name, std::ios::binary);
    if (!raw) throw Error(ErrorKind::io, "cannot write " + (dir / raw_name).string());
    std::vector<unsigned char> bytes(volume.voxel_count() * sizeof(float));
    for (std::size_t n = 0; n < volume.voxel_count(); ++n) {
        float v = volume.data()[n];
        auto* p = reinterpret_cast<unsigned char*>(&v);
        if constexpr (std::endian::native == std::endian::big) std::reverse(p, p + sizeof(float));
        std::memcpy(bytes.data() + n * sizeof(float), p, sizeof(float));
    }
    raw.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!raw) throw Error(ErrorKind::io, "short write to " + (dir / raw_name).string());
    return header_path;
}

}  // namespace carmsim
