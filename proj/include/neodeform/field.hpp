#pragma once

// Grid containers, finite-difference stencils and resampling on a unit-spaced
// 2D pixel grid. Storage is row-major with x (column) varying fastest.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "neodeform/error.hpp"

namespace neodeform {

template <class T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
        check_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }
    Grid(int width, int height, std::vector<T> values)
        : width_(width), height_(height), data_(std::move(values)) {
        check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * height)
            throw Error(ErrorCode::ShapeMismatch, "value count does not match width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() & noexcept { return data_; }
    std::span<const T> values() const& noexcept { return data_; }
    // A view into a temporary would dangle.
    std::span<const T> values() && = delete;

    template <class U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static void check_dims(int width, int height) {
        if (width < 2 || height < 2)
            throw Error(ErrorCode::InvalidArgument, "grid dimensions must be at least 2x2");
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ScalarField = Grid<double>;

/// 2x2 matrix; entry (i, j) is row i, column j.
struct Mat2 {
    double m00 = 0, m01 = 0, m10 = 0, m11 = 0;

    static constexpr Mat2 identity() { return {1, 0, 0, 1}; }
    static constexpr Mat2 diag(double a, double b) { return {a, 0, 0, b}; }

    constexpr double det() const { return m00 * m11 - m01 * m10; }
    constexpr double trace() const { return m00 + m11; }
    /// Tr(M M^T), the squared Frobenius norm.
    constexpr double frobenius_sq() const { return m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11; }
    constexpr Mat2 transpose() const { return {m00, m10, m01, m11}; }
    /// Inverse transpose, given the determinant.
    constexpr Mat2 inverse_transpose(double det) const {
        return {m11 / det, -m10 / det, -m01 / det, m00 / det};
    }

    friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.m00 + b.m00, a.m01 + b.m01, a.m10 + b.m10, a.m11 + b.m11};
    }
    friend constexpr Mat2 operator*(double s, const Mat2& a) {
        return {s * a.m00, s * a.m01, s * a.m10, s * a.m11};
    }
    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
                a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

using TensorField = Grid<Mat2>;

enum class Tissue : std::uint8_t { Background = 0, Csf = 1, Gm = 2, Wm = 3, Dgm = 4 };
inline constexpr int kTissueCount = 5;

using LabelField = Grid<Tissue>;

/// Small bitmask over tissue classes.
class TissueSet {
public:
    constexpr TissueSet() = default;
    constexpr TissueSet(std::initializer_list<Tissue> classes) {
        for (Tissue t : classes) bits_ |= bit(t);
    }
    constexpr bool contains(Tissue t) const { return (bits_ & bit(t)) != 0; }

private:
    static constexpr std::uint8_t bit(Tissue t) {
        return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
    }
    std::uint8_t bits_ = 0;
};

inline constexpr TissueSet kBrainTissues{Tissue::Gm, Tissue::Wm, Tissue::Dgm};

/// Throws InvalidArgument unless every raw label lies in {0..4}.
LabelField make_labels(int width, int height, std::span<const std::uint8_t> raw);

/// Two-plane displacement, in pixels. Sampling convention: output pixel p reads
/// the source at p + u(p).
struct DisplacementField {
    ScalarField ux;
    ScalarField uy;

    DisplacementField() = default;
    DisplacementField(int width, int height) : ux(width, height), uy(width, height) {}
    DisplacementField(ScalarField x, ScalarField y);

    int width() const noexcept { return ux.width(); }
    int height() const noexcept { return ux.height(); }
    std::size_t size() const noexcept { return ux.size(); }

    friend bool operator==(const DisplacementField&, const DisplacementField&) = default;
};

struct Pixel {
    int x = 0;
    int y = 0;
    friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
};

// Finite-difference stencils: central differences inside, one-sided at the
// first and last column (row). The adjoints are the exact transposes.
ScalarField diff_x(const ScalarField& f);
ScalarField diff_y(const ScalarField& f);
ScalarField diff_x_adjoint(const ScalarField& g);
ScalarField diff_y_adjoint(const ScalarField& g);

/// Entry (i, j) of each pixel tensor is d u_i / d x_j.
TensorField gradient_field(const DisplacementField& u);
/// F = I + grad u.
TensorField deformation_gradient(const DisplacementField& u);
ScalarField jacobian_det(const TensorField& t);

/// Bilinear resampling at p + u(p); samples outside [0, w-1] x [0, h-1] give 0.
ScalarField warp_image(const ScalarField& img, const DisplacementField& u);
/// Nearest-neighbour resampling (half away from zero); outside gives background.
LabelField warp_labels(const LabelField& labels, const DisplacementField& u);

/// Rounded centroid of pixels in `classes`; ties go to the lower index.
Pixel center_of_mass(const LabelField& labels, TissueSet classes);

}  // namespace neodeform
