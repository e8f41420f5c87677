#include "neodeform/biomech.hpp"

#include <cmath>
#include <string>

namespace neodeform {

std::string_view to_string(AtrophyConvention c) {
    return c == AtrophyConvention::Jacobian ? "jacobian" : "paper";
}

AtrophyConvention parse_convention(std::string_view s) {
    if (s == "jacobian") return AtrophyConvention::Jacobian;
    if (s == "paper") return AtrophyConvention::Paper;
    throw Error(ErrorCode::InvalidArgument, "unknown atrophy convention '" + std::string(s) + "'");
}

EnergyParams EnergyParams::for_dimension(int d) {
    EnergyParams p;
    p.dims = d;
    if (d == 2) {
        p.alpha = 1.0;
        p.beta = 2.0;
    } else if (d == 3) {
        p.alpha = 2.0 / 3.0;
        p.beta = 3.0;
    } else {
        throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
    }
    return p;
}

void EnergyParams::validate() const {
    const EnergyParams expected = for_dimension(dims);
    if (alpha != expected.alpha || beta != expected.beta)
        throw Error(ErrorCode::InvalidArgument, "alpha/beta inconsistent with dimension");
    if (!(bulk_ratio > 0)) throw Error(ErrorCode::InvalidArgument, "bulk_ratio must be positive");
    if (!(mu_tissue > 0) || !(mu_csf > 0)) throw Error(ErrorCode::InvalidArgument, "shear moduli must be positive");
    if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw Error(ErrorCode::InvalidArgument, "penalty weights must be >= 0");
}

ScalarField material_map(const LabelField& labels, const EnergyParams& params) {
    ScalarField mu(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
            case Tissue::Background: mu[i] = 0.0; break;
            case Tissue::Csf: mu[i] = params.mu_csf; break;
            case Tissue::Gm:
            case Tissue::Wm:
            case Tissue::Dgm: mu[i] = params.mu_tissue; break;
        }
    }
    return mu;
}

double growth_factor(double a, const EnergyParams& params) {
    if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveAtrophy, "atrophy value " + std::to_string(a) + " <= 0");
    if (params.dims == 2) return params.convention == AtrophyConvention::Jacobian ? std::sqrt(a) : 1.0 / std::sqrt(a);
    const double e = 1.0 / params.dims;
    return std::pow(a, params.convention == AtrophyConvention::Jacobian ? e : -e);
}

TensorField growth_tensor(const ScalarField& a, const EnergyParams& params) {
    TensorField g(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = growth_factor(a[i], params);
        g[i] = Mat2::diag(s, s);
    }
    return g;
}

TensorField elastic_gradient(const TensorField& F, const TensorField& G) {
    if (!F.same_shape(G)) throw Error(ErrorCode::ShapeMismatch, "F and G differ in shape");
    TensorField out(F.width(), F.height());
    for (std::size_t i = 0; i < F.size(); ++i) {
        const Mat2& g = G[i];
        if (g.m01 != 0.0 || g.m10 != 0.0) throw Error(ErrorCode::InvalidArgument, "growth tensor must be diagonal");
        if (!(g.m00 > kSingularGrowthThreshold) || !(g.m11 > kSingularGrowthThreshold))
            throw Error(ErrorCode::SingularGrowth, "growth tensor diagonal entry <= 1e-12");
        const Mat2& f = F[i];
        out[i] = {f.m00 / g.m00, f.m01 / g.m11, f.m10 / g.m00, f.m11 / g.m11};
    }
    return out;
}

namespace {

double j_power(double j, double alpha) { return alpha == 1.0 ? 1.0 / j : std::pow(j, -alpha); }

void check_inversion(double j) {
    if (!(j > kInversionThreshold))
        throw Error(ErrorCode::InvertedElement, "elastic Jacobian " + std::to_string(j) + " <= 1e-6");
}

}  // namespace

double energy_density(const Mat2& fk, double mu, const EnergyParams& params) {
    if (mu == 0.0) return 0.0;
    const double j = fk.det();
    check_inversion(j);
    const double k = params.bulk_ratio * mu;
    return 0.5 * mu * (fk.frobenius_sq() * j_power(j, params.alpha) - params.beta) + 0.5 * k * (j - 1.0) * (j - 1.0);
}

Mat2 energy_stress(const Mat2& fk, double mu, const EnergyParams& params) {
    if (mu == 0.0) return {};
    const double j = fk.det();
    check_inversion(j);
    const double k = params.bulk_ratio * mu;
    const double jp = j_power(j, params.alpha);
    const Mat2 fk_invt = fk.inverse_transpose(j);
    if (!std::isfinite(fk_invt.m00) || !std::isfinite(fk_invt.m01) || !std::isfinite(fk_invt.m10) ||
        !std::isfinite(fk_invt.m11))
        throw Error(ErrorCode::SingularElastic, "elastic deformation gradient is singular");
    // dJ/dF_K = J F_K^-T
    const double vol = -params.alpha * 0.5 * mu * fk.frobenius_sq() * jp + k * (j - 1.0) * j;
    return (mu * jp) * fk + vol * fk_invt;
}

ScalarField strain_energy_density(const TensorField& fk, const ScalarField& mu, const EnergyParams& params) {
    if (!fk.same_shape(mu)) throw Error(ErrorCode::ShapeMismatch, "F_K and material map differ in shape");
    ScalarField w(fk.width(), fk.height());
    for (std::size_t i = 0; i < fk.size(); ++i) w[i] = energy_density(fk[i], mu[i], params);
    return w;
}

LossModel::LossModel(const ScalarField& atrophy, const LabelField& labels, const EnergyParams& params)
    : width_(atrophy.width()), height_(atrophy.height()), params_(params) {
    params_.validate();
    if (!atrophy.same_shape(labels)) throw Error(ErrorCode::ShapeMismatch, "atrophy map and labels differ in shape");
    center_ = center_of_mass(labels, kBrainTissues);
    growth_.resize(atrophy.size());
    for (std::size_t i = 0; i < atrophy.size(); ++i) growth_[i] = growth_factor(atrophy[i], params_);
    const ScalarField mu = material_map(labels, params_);
    mu_.assign(mu.values().begin(), mu.values().end());
    background_.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) background_[i] = labels[i] == Tissue::Background;
}

void LossModel::check_shape(const DisplacementField& u) const {
    if (u.width() != width_ || u.height() != height_)
        throw Error(ErrorCode::ShapeMismatch, "displacement does not match the loss grid");
}

LossBreakdown LossModel::loss(const DisplacementField& u) const {
    check_shape(u);
    const TensorField F = deformation_gradient(u);
    LossBreakdown out;
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (mu_[i] != 0.0) {
            const Mat2& f = F[i];
            const double g = growth_[i];
            out.energy += energy_density({f.m00 / g, f.m01 / g, f.m10 / g, f.m11 / g}, mu_[i], params_);
        }
        if (background_[i]) out.background_penalty += u.ux[i] * u.ux[i] + u.uy[i] * u.uy[i];
    }
    const std::size_t c = u.ux.index(center_.x, center_.y);
    out.center_penalty = u.ux[c] * u.ux[c] + u.uy[c] * u.uy[c];
    out.total = out.energy + params_.lambda1 * out.background_penalty + params_.lambda2 * out.center_penalty;
    return out;
}

LossBreakdown total_loss(const DisplacementField& u, const ScalarField& atrophy, const LabelField& labels,
                         const EnergyParams& params) {
    return LossModel(atrophy, labels, params).loss(u);
}

}  // namespace neodeform
