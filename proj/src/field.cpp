#include "neodeform/field.hpp"

#include <cmath>
#include <cstdint>

namespace neodeform {

LabelField make_labels(int width, int height, std::span<const std::uint8_t> raw) {
    LabelField out(width, height);
    if (raw.size() != out.size())
        throw Error(ErrorCode::ShapeMismatch, "label count does not match width*height");
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] >= kTissueCount)
            throw Error(ErrorCode::InvalidArgument, "label out of range: " + std::to_string(raw[i]));
        out[i] = static_cast<Tissue>(raw[i]);
    }
    return out;
}

DisplacementField::DisplacementField(ScalarField x, ScalarField y) : ux(std::move(x)), uy(std::move(y)) {
    if (!ux.same_shape(uy))
        throw Error(ErrorCode::ShapeMismatch, "displacement planes differ in shape");
}

namespace {

// Applies the 1D stencil along a strided line of length n.
void diff_line(const double* in, double* out, int n, std::ptrdiff_t stride) {
    out[0] = in[stride] - in[0];
    for (int i = 1; i < n - 1; ++i) out[i * stride] = 0.5 * (in[(i + 1) * stride] - in[(i - 1) * stride]);
    out[(n - 1) * stride] = in[(n - 1) * stride] - in[(n - 2) * stride];
}

void diff_line_adjoint(const double* g, double* out, int n, std::ptrdiff_t stride) {
    for (int i = 0; i < n; ++i) out[i * stride] = 0.0;
    out[0] -= g[0];
    out[stride] += g[0];
    for (int i = 1; i < n - 1; ++i) {
        const double h = 0.5 * g[i * stride];
        out[(i + 1) * stride] += h;
        out[(i - 1) * stride] -= h;
    }
    out[(n - 1) * stride] += g[(n - 1) * stride];
    out[(n - 2) * stride] -= g[(n - 1) * stride];
}

template <class LineOp>
ScalarField along_x(const ScalarField& f, LineOp op) {
    ScalarField out(f.width(), f.height());
    for (int y = 0; y < f.height(); ++y)
        op(&f.values()[f.index(0, y)], &out.values()[out.index(0, y)], f.width(), 1);
    return out;
}

template <class LineOp>
ScalarField along_y(const ScalarField& f, LineOp op) {
    ScalarField out(f.width(), f.height());
    for (int x = 0; x < f.width(); ++x)
        op(&f.values()[x], &out.values()[x], f.height(), f.width());
    return out;
}

}  // namespace

ScalarField diff_x(const ScalarField& f) { return along_x(f, diff_line); }
ScalarField diff_y(const ScalarField& f) { return along_y(f, diff_line); }
ScalarField diff_x_adjoint(const ScalarField& g) { return along_x(g, diff_line_adjoint); }
ScalarField diff_y_adjoint(const ScalarField& g) { return along_y(g, diff_line_adjoint); }

TensorField gradient_field(const DisplacementField& u) {
    const ScalarField dxx = diff_x(u.ux), dxy = diff_y(u.ux);
    const ScalarField dyx = diff_x(u.uy), dyy = diff_y(u.uy);
    TensorField out(u.width(), u.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {dxx[i], dxy[i], dyx[i], dyy[i]};
    return out;
}

TensorField deformation_gradient(const DisplacementField& u) {
    TensorField out = gradient_field(u);
    for (Mat2& m : out.values()) {
        m.m00 += 1.0;
        m.m11 += 1.0;
    }
    return out;
}

ScalarField jacobian_det(const TensorField& t) {
    ScalarField out(t.width(), t.height());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].det();
    return out;
}

ScalarField warp_image(const ScalarField& img, const DisplacementField& u) {
    if (!img.same_shape(u.ux)) throw Error(ErrorCode::ShapeMismatch, "image and displacement differ in shape");
    const int w = img.width(), h = img.height();
    ScalarField out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = img.index(x, y);
            const double sx = x + u.ux[i];
            const double sy = y + u.uy[i];
            if (!(sx >= 0.0 && sx <= w - 1 && sy >= 0.0 && sy <= h - 1)) continue;
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            if (x0 == w - 1) --x0;
            if (y0 == h - 1) --y0;
            const double fx = sx - x0;
            const double fy = sy - y0;
            const double top = std::lerp(img(x0, y0), img(x0 + 1, y0), fx);
            const double bottom = std::lerp(img(x0, y0 + 1), img(x0 + 1, y0 + 1), fx);
            out[i] = std::lerp(top, bottom, fy);
        }
    }
    return out;
}

LabelField warp_labels(const LabelField& labels, const DisplacementField& u) {
    if (!labels.same_shape(u.ux)) throw Error(ErrorCode::ShapeMismatch, "labels and displacement differ in shape");
    const int w = labels.width(), h = labels.height();
    LabelField out(w, h, Tissue::Background);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = labels.index(x, y);
            const double sx = std::round(x + u.ux[i]);
            const double sy = std::round(y + u.uy[i]);
            if (sx < 0 || sx > w - 1 || sy < 0 || sy > h - 1) continue;
            out[i] = labels(static_cast<int>(sx), static_cast<int>(sy));
        }
    }
    return out;
}

namespace {

// Nearest integer to sum / n (n > 0, sum >= 0); exact halves round down.
int round_half_down(std::int64_t sum, std::int64_t n) {
    const std::int64_t q = sum / n;
    const std::int64_t r = sum % n;
    return static_cast<int>(2 * r > n ? q + 1 : q);
}

}  // namespace

Pixel center_of_mass(const LabelField& labels, TissueSet classes) {
    std::int64_t sx = 0, sy = 0, n = 0;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            if (!classes.contains(labels(x, y))) continue;
            sx += x;
            sy += y;
            ++n;
        }
    }
    if (n == 0) throw Error(ErrorCode::EmptyMask, "no pixel carries a selected label");
    return {round_half_down(sx, n), round_half_down(sy, n)};
}

}  // namespace neodeform
