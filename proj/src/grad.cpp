#include "neodeform/grad.hpp"

#include <algorithm>
#include <cmath>

#include "neodeform/random.hpp"

namespace neodeform {

LossBreakdown LossModel::loss_and_gradient(const DisplacementField& u, DisplacementField& grad) const {
    check_shape(u);
    const TensorField F = deformation_gradient(u);
    ScalarField p00(width_, height_), p01(width_, height_), p10(width_, height_), p11(width_, height_);

    LossBreakdown out;
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double mu = mu_[i];
        if (mu == 0.0) continue;
        const Mat2& f = F[i];
        const double g = growth_[i];
        const Mat2 fk{f.m00 / g, f.m01 / g, f.m10 / g, f.m11 / g};
        out.energy += energy_density(fk, mu, params_);
        // F_K = F / g, so dW/dF = (dW/dF_K) / g.
        const Mat2 s = energy_stress(fk, mu, params_);
        p00[i] = s.m00 / g;
        p01[i] = s.m01 / g;
        p10[i] = s.m10 / g;
        p11[i] = s.m11 / g;
    }

    // F = I + [Dx ux, Dy ux; Dx uy, Dy uy]
    grad.ux = diff_x_adjoint(p00);
    grad.uy = diff_x_adjoint(p10);
    const ScalarField gy_ux = diff_y_adjoint(p01);
    const ScalarField gy_uy = diff_y_adjoint(p11);
    for (std::size_t i = 0; i < F.size(); ++i) {
        grad.ux[i] += gy_ux[i];
        grad.uy[i] += gy_uy[i];
        if (background_[i]) {
            out.background_penalty += u.ux[i] * u.ux[i] + u.uy[i] * u.uy[i];
            grad.ux[i] += 2.0 * params_.lambda1 * u.ux[i];
            grad.uy[i] += 2.0 * params_.lambda1 * u.uy[i];
        }
    }
    const std::size_t c = u.ux.index(center_.x, center_.y);
    out.center_penalty = u.ux[c] * u.ux[c] + u.uy[c] * u.uy[c];
    grad.ux[c] += 2.0 * params_.lambda2 * u.ux[c];
    grad.uy[c] += 2.0 * params_.lambda2 * u.uy[c];
    out.total = out.energy + params_.lambda1 * out.background_penalty + params_.lambda2 * out.center_penalty;
    return out;
}

DisplacementField loss_gradient(const DisplacementField& u, const ScalarField& atrophy, const LabelField& labels,
                                const EnergyParams& params) {
    DisplacementField grad;
    LossModel(atrophy, labels, params).loss_and_gradient(u, grad);
    return grad;
}

GradCheckReport finite_diff_check(const DisplacementField& u, const ScalarField& atrophy, const LabelField& labels,
                                  const EnergyParams& params, std::size_t n_probes, double step, double tolerance,
                                  std::uint64_t seed) {
    if (n_probes == 0) throw Error(ErrorCode::InvalidArgument, "n_probes must be >= 1");
    if (!(step > 0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
    const LossModel model(atrophy, labels, params);
    DisplacementField analytic;
    model.loss_and_gradient(u, analytic);

    Rng rng(seed);
    GradCheckReport report;
    report.n_probes = n_probes;
    DisplacementField probe = u;
    for (std::size_t k = 0; k < n_probes; ++k) {
        const std::size_t i = rng.index(u.size());
        const bool y_component = rng.index(2) == 1;
        ScalarField& plane = y_component ? probe.uy : probe.ux;
        const double saved = plane[i];
        plane[i] = saved + step;
        const double plus = model.loss(probe).total;
        plane[i] = saved - step;
        const double minus = model.loss(probe).total;
        plane[i] = saved;

        const double numeric = (plus - minus) / (2.0 * step);
        const double exact = y_component ? analytic.uy[i] : analytic.ux[i];
        const double abs_err = std::abs(exact - numeric);
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, abs_err / std::max(1.0, std::abs(numeric)));
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

}  // namespace neodeform
