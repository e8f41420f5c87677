#include "neodeform/metrics.hpp"

#include <cstdint>

namespace neodeform {

double mse_atrophy(const ScalarField& atrophy, const DisplacementField& u, const LabelField& mask, bool masked) {
    if (!atrophy.same_shape(u.ux) || !atrophy.same_shape(mask))
        throw Error(ErrorCode::ShapeMismatch, "atrophy, displacement and mask differ in shape");
    const ScalarField det = jacobian_det(deformation_gradient(u));
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < atrophy.size(); ++i) {
        if (masked && !kBrainTissues.contains(mask[i])) continue;
        const double d = atrophy[i] - det[i];
        sum += d * d;
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::EmptyMask, "no brain pixels in mask");
    return sum / static_cast<double>(n);
}

double mse_image(const ScalarField& x, const ScalarField& y) {
    if (!x.same_shape(y)) throw Error(ErrorCode::ShapeMismatch, "images differ in shape");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sum += d * d;
    }
    return sum / static_cast<double>(x.size());
}

double dice(const LabelField& x, const LabelField& y, Tissue cls) {
    if (!x.same_shape(y)) throw Error(ErrorCode::ShapeMismatch, "label maps differ in shape");
    std::int64_t nx = 0, ny = 0, both = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool in_x = x[i] == cls, in_y = y[i] == cls;
        nx += in_x;
        ny += in_y;
        both += in_x && in_y;
    }
    if (nx + ny == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

}  // namespace neodeform
