#pragma once

// Growth decomposition F = F_K * G and the compressible Neo-Hookean energy
//   W = mu/2 [Tr(F_K F_K^T) J^-alpha - beta] + K/2 (J - 1)^2,  J = det F_K, K = bulk_ratio * mu
// together with the boundary penalties of the total cost.

#include <string_view>
#include <vector>

#include "neodeform/field.hpp"

namespace neodeform {

/// How the prescribed map a sets the isotropic growth factor g (G = g I).
///   Jacobian: g = a^(+1/d), det G = a, so a is the target local area change.
///   Paper:    g = a^(-1/d), the formula as originally written.
enum class AtrophyConvention { Jacobian, Paper };

std::string_view to_string(AtrophyConvention c);
AtrophyConvention parse_convention(std::string_view s);

struct EnergyParams {
    double alpha = 1.0;  ///< exponent on J in the isochoric term
    double beta = 2.0;   ///< rest-state offset, equals d
    double bulk_ratio = 100.0;
    double mu_tissue = 1.0;
    double mu_csf = 0.01;
    double lambda1 = 1e-1;  ///< background displacement penalty
    double lambda2 = 1e2;   ///< center-of-mass displacement penalty
    int dims = 2;
    AtrophyConvention convention = AtrophyConvention::Jacobian;

    /// Defaults with alpha/beta set for d = 2 (1, 2) or d = 3 (2/3, 3).
    static EnergyParams for_dimension(int d);
    void validate() const;
};

/// Shear modulus per pixel: mu_tissue on GM/WM/DGM, mu_csf on CSF, 0 on background.
ScalarField material_map(const LabelField& labels, const EnergyParams& params);

/// Raw (unweighted) penalty sums; total = energy + lambda1 * background + lambda2 * center.
struct LossBreakdown {
    double total = 0.0;
    double energy = 0.0;
    double background_penalty = 0.0;
    double center_penalty = 0.0;
};

inline constexpr double kInversionThreshold = 1e-6;
inline constexpr double kSingularGrowthThreshold = 1e-12;

/// Growth factor g for one atrophy value; throws NonPositiveAtrophy for a <= 0.
double growth_factor(double a, const EnergyParams& params);
TensorField growth_tensor(const ScalarField& a, const EnergyParams& params);
/// F_K = F G^-1 for diagonal G.
TensorField elastic_gradient(const TensorField& F, const TensorField& G);

/// W at one pixel. mu == 0 returns exactly 0; otherwise J <= 1e-6 throws InvertedElement.
double energy_density(const Mat2& fk, double mu, const EnergyParams& params);
/// dW/dF_K at one pixel (first Piola-Kirchhoff stress of the elastic part).
Mat2 energy_stress(const Mat2& fk, double mu, const EnergyParams& params);

ScalarField strain_energy_density(const TensorField& fk, const ScalarField& mu, const EnergyParams& params);

/// Precomputed per-pixel state for repeated evaluation of the total cost on
/// one (atrophy map, labels) pair.
class LossModel {
public:
    LossModel(const ScalarField& atrophy, const LabelField& labels, const EnergyParams& params);

    LossBreakdown loss(const DisplacementField& u) const;
    /// Loss plus dL/du written into `grad` (resized as needed). Defined with the gradient code.
    LossBreakdown loss_and_gradient(const DisplacementField& u, DisplacementField& grad) const;

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Pixel center() const noexcept { return center_; }
    const EnergyParams& params() const noexcept { return params_; }

private:
    void check_shape(const DisplacementField& u) const;

    int width_;
    int height_;
    EnergyParams params_;
    std::vector<double> growth_;  // g per pixel
    std::vector<double> mu_;
    std::vector<unsigned char> background_;
    Pixel center_;
};

LossBreakdown total_loss(const DisplacementField& u, const ScalarField& atrophy, const LabelField& labels,
                         const EnergyParams& params);

}  // namespace neodeform
