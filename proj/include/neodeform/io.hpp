#pragma once

// ATRF field files:
//   "ATRF" | u32 version (=1) | u8 kind (0 scalar, 1 displacement, 2 labels)
//   | u32 width | u32 height | payload
// Scalars are f64 row-major, displacements store the ux plane then the uy
// plane, labels are one byte per pixel. All integers and reals little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "neodeform/field.hpp"

namespace neodeform {

enum class FieldKind : std::uint8_t { Scalar = 0, Displacement = 1, Labels = 2 };

using AnyField = std::variant<ScalarField, DisplacementField, LabelField>;

inline constexpr std::uint32_t kFieldFormatVersion = 1;

std::vector<std::uint8_t> encode_field(const AnyField& field);
AnyField decode_field(std::span<const std::uint8_t> bytes);

void write_field(const std::filesystem::path& path, const AnyField& field);
AnyField read_field(const std::filesystem::path& path);

/// Typed read; throws BadHeader when the file holds another kind.
ScalarField read_scalar(const std::filesystem::path& path);
DisplacementField read_displacement(const std::filesystem::path& path);
LabelField read_labels(const std::filesystem::path& path);

/// Binary 8-bit PGM; pixel = round(clamp((v - lo) / (hi - lo), 0, 1) * 255).
void export_pgm(const ScalarField& field, const std::filesystem::path& path, double lo, double hi);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Little-endian serialization helpers shared by the binary formats.
class ByteWriter {
public:
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
    std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    bool has(std::size_t n) const noexcept { return remaining() >= n; }

    std::string raw(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * k);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * k);
        return std::bit_cast<double>(v);
    }

private:
    void need(std::size_t n) const {
        if (!has(n)) throw Error(ErrorCode::TruncatedPayload, "unexpected end of data");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace neodeform
