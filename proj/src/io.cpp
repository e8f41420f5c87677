#include "neodeform/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace neodeform {

namespace {

constexpr std::string_view kFieldMagic = "ATRF";

void write_header(ByteWriter& w, FieldKind kind, int width, int height) {
    w.raw(kFieldMagic);
    w.u32(kFieldFormatVersion);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u32(static_cast<std::uint32_t>(width));
    w.u32(static_cast<std::uint32_t>(height));
}

ScalarField read_plane(ByteReader& r, int width, int height) {
    ScalarField f(width, height);
    for (double& v : f.values()) v = r.f64();
    return f;
}

}  // namespace

std::vector<std::uint8_t> encode_field(const AnyField& field) {
    ByteWriter w;
    if (const auto* s = std::get_if<ScalarField>(&field)) {
        write_header(w, FieldKind::Scalar, s->width(), s->height());
        for (double v : s->values()) w.f64(v);
    } else if (const auto* d = std::get_if<DisplacementField>(&field)) {
        write_header(w, FieldKind::Displacement, d->width(), d->height());
        for (double v : d->ux.values()) w.f64(v);
        for (double v : d->uy.values()) w.f64(v);
    } else {
        const auto& l = std::get<LabelField>(field);
        write_header(w, FieldKind::Labels, l.width(), l.height());
        for (Tissue t : l.values()) w.u8(static_cast<std::uint8_t>(t));
    }
    return std::move(w.bytes());
}

AnyField decode_field(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.raw(kFieldMagic.size()) != kFieldMagic) throw Error(ErrorCode::BadMagic, "not an ATRF field file");
    const std::uint32_t version = r.u32();
    if (version != kFieldFormatVersion)
        throw Error(ErrorCode::UnsupportedVersion, "field format version " + std::to_string(version));
    const std::uint8_t kind = r.u8();
    const std::uint32_t width = r.u32(), height = r.u32();
    if (width < 2 || height < 2 || width > (1u << 16) || height > (1u << 16))
        throw Error(ErrorCode::BadHeader, "invalid grid dimensions");
    const std::uint64_t pixels = std::uint64_t{width} * height;
    std::uint64_t payload = 0;
    switch (kind) {
        case 0: payload = pixels * 8; break;
        case 1: payload = pixels * 16; break;
        case 2: payload = pixels; break;
        default: throw Error(ErrorCode::BadHeader, "unknown field kind " + std::to_string(kind));
    }
    if (r.remaining() < payload) throw Error(ErrorCode::TruncatedPayload, "payload shorter than header declares");
    if (r.remaining() > payload) throw Error(ErrorCode::BadHeader, "trailing bytes after payload");

    const int w = static_cast<int>(width), h = static_cast<int>(height);
    if (kind == 0) return read_plane(r, w, h);
    if (kind == 1) {
        ScalarField ux = read_plane(r, w, h);
        ScalarField uy = read_plane(r, w, h);
        return DisplacementField(std::move(ux), std::move(uy));
    }
    std::vector<std::uint8_t> raw(pixels);
    for (auto& b : raw) b = r.u8();
    try {
        return make_labels(w, h, raw);
    } catch (const Error& e) {
        throw Error(ErrorCode::BadHeader, e.what());
    }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed: " + path.string());
    return bytes;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

void write_field(const std::filesystem::path& path, const AnyField& field) { write_bytes(path, encode_field(field)); }

AnyField read_field(const std::filesystem::path& path) { return decode_field(read_bytes(path)); }

namespace {

template <class T>
T read_as(const std::filesystem::path& path, const char* what) {
    AnyField f = read_field(path);
    if (auto* v = std::get_if<T>(&f)) return std::move(*v);
    throw Error(ErrorCode::BadHeader, path.string() + " is not a " + what + " field");
}

}  // namespace

ScalarField read_scalar(const std::filesystem::path& path) { return read_as<ScalarField>(path, "scalar"); }
DisplacementField read_displacement(const std::filesystem::path& path) {
    return read_as<DisplacementField>(path, "displacement");
}
LabelField read_labels(const std::filesystem::path& path) { return read_as<LabelField>(path, "label"); }

void export_pgm(const ScalarField& field, const std::filesystem::path& path, double lo, double hi) {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "export_pgm needs lo < hi");
    const std::string header =
        "P5\n" + std::to_string(field.width()) + " " + std::to_string(field.height()) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + field.size());
    for (double v : field.values()) {
        double t = (v - lo) / (hi - lo);
        t = std::isnan(t) ? 0.0 : std::clamp(t, 0.0, 1.0);
        bytes.push_back(static_cast<std::uint8_t>(std::round(t * 255.0)));
    }
    write_bytes(path, bytes);
}

}  // namespace neodeform
