#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "neodeform/biomech.hpp"
#include "neodeform/random.hpp"
#include "test_util.hpp"

namespace neodeform {
namespace {

// Energy density written directly from the constitutive law, 2D.
double energy_oracle(double f00, double f01, double f10, double f11, double mu, double bulk_ratio) {
    const double j = f00 * f11 - f01 * f10;
    const double tr = f00 * f00 + f01 * f01 + f10 * f10 + f11 * f11;
    return mu / 2.0 * (tr / j - 2.0) + bulk_ratio * mu / 2.0 * (j - 1.0) * (j - 1.0);
}

Mat2 rotation(double theta) {
    return {std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)};
}

TEST(Convention, ParseRoundTrip) {
    EXPECT_EQ(parse_convention("jacobian"), AtrophyConvention::Jacobian);
    EXPECT_EQ(parse_convention(to_string(AtrophyConvention::Paper)), AtrophyConvention::Paper);
    EXPECT_THROW(parse_convention("volume"), Error);
}

TEST(EnergyParams, ForDimension) {
    const EnergyParams p3 = EnergyParams::for_dimension(3);
    EXPECT_NEAR(p3.alpha, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(p3.beta, 3.0);
    const EnergyParams p2 = EnergyParams::for_dimension(2);
    EXPECT_EQ(p2.alpha, 1.0);
    EXPECT_EQ(p2.beta, 2.0);
    EXPECT_THROW(EnergyParams::for_dimension(4), Error);
}

TEST(MaterialMap, PerTissue) {
    const std::uint8_t raw[] = {0, 1, 2, 3, 4, 0};
    const ScalarField mu = material_map(make_labels(3, 2, raw), EnergyParams{});
    EXPECT_EQ(mu[0], 0.0);
    EXPECT_EQ(mu[1], 0.01);
    EXPECT_EQ(mu[2], 1.0);
    EXPECT_EQ(mu[3], 1.0);
    EXPECT_EQ(mu[4], 1.0);
}

TEST(GrowthTensor, Examples) {
    EnergyParams jac;
    EnergyParams paper;
    paper.convention = AtrophyConvention::Paper;
    for (const EnergyParams& p : {jac, paper}) {
        const TensorField g = growth_tensor(ScalarField(3, 3, 1.0), p);
        for (const Mat2& m : g.values()) EXPECT_EQ(m, Mat2::identity());
    }

    const Mat2 gp = growth_tensor(ScalarField(2, 2, 4.0), paper)(0, 0);
    EXPECT_NEAR(gp.m00, 0.5, 1e-15);
    EXPECT_NEAR(gp.m11, 0.5, 1e-15);
    EXPECT_EQ(gp.m01, 0.0);

    const Mat2 gj = growth_tensor(ScalarField(2, 2, 0.81), jac)(1, 1);
    EXPECT_NEAR(gj.m00, 0.9, 1e-15);
    EXPECT_NEAR(gj.det(), 0.81, 1e-15);
}

TEST(GrowthTensor, NonPositiveAtrophyThrows) {
    ScalarField a(3, 3, 1.0);
    a(1, 2) = 0.0;
    EXPECT_ERROR_CODE(growth_tensor(a, EnergyParams{}), ErrorCode::NonPositiveAtrophy);
    a(1, 2) = -0.5;
    EXPECT_ERROR_CODE(growth_tensor(a, EnergyParams{}), ErrorCode::NonPositiveAtrophy);
}

TEST(ElasticGradient, Examples) {
    const TensorField id(2, 2, Mat2::identity());
    EXPECT_EQ(elastic_gradient(id, id)(0, 0), Mat2::identity());

    const TensorField c(2, 2, Mat2::diag(0.9, 0.9));
    EXPECT_EQ(elastic_gradient(c, c)(1, 0), Mat2::identity());

    const Mat2 fk = elastic_gradient(TensorField(2, 2, Mat2::diag(1.1, 1.0)), TensorField(2, 2, Mat2::diag(0.5, 0.5)))(0, 1);
    EXPECT_NEAR(fk.m00, 2.2, 1e-15);
    EXPECT_NEAR(fk.m11, 2.0, 1e-15);
}

TEST(ElasticGradient, SingularGrowthThrows) {
    const TensorField g(2, 2, Mat2::diag(1e-13, 1.0));
    EXPECT_ERROR_CODE(elastic_gradient(TensorField(2, 2, Mat2::identity()), g), ErrorCode::SingularGrowth);
}

TEST(Energy, RestStateIsZero) { EXPECT_EQ(energy_density(Mat2::identity(), 1.0, EnergyParams{}), 0.0); }

TEST(Energy, UniaxialStretchValue) {
    EXPECT_NEAR(energy_density(Mat2::diag(1.1, 1.0), 1.0, EnergyParams{}), 0.5045454545454545, 1e-9);
    const TensorField fk(2, 2, Mat2::diag(1.1, 1.0));
    EXPECT_NEAR(strain_energy_density(fk, ScalarField(2, 2, 1.0), EnergyParams{})(1, 1), 0.5045454545, 1e-9);
}

TEST(Energy, RotationsCostNothing) {
    for (double th : {0.1, 1.0, std::numbers::pi / 2, 2.5, -3.0})
        EXPECT_NEAR(energy_density(rotation(th), 1.0, EnergyParams{}), 0.0, 1e-14);
}

TEST(Energy, MatchesOracleAndIsNonNegative) {
    Rng rng(3);
    const EnergyParams p;
    for (int i = 0; i < 200; ++i) {
        Mat2 f{rng.uniform(0.5, 1.5), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(0.5, 1.5)};
        if (f.det() <= 0.05) continue;
        const double mu = rng.uniform(0.01, 2.0);
        const double w = energy_density(f, mu, p);
        EXPECT_NEAR(w, energy_oracle(f.m00, f.m01, f.m10, f.m11, mu, p.bulk_ratio), 1e-12 * (1 + std::abs(w)));
        EXPECT_GE(w, 0.0);
    }
}

TEST(Energy, RotationInvariance) {
    Rng rng(4);
    const EnergyParams p;
    for (int i = 0; i < 100; ++i) {
        Mat2 f{rng.uniform(0.7, 1.3), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.7, 1.3)};
        const Mat2 r = rotation(rng.uniform(-std::numbers::pi, std::numbers::pi));
        const double w = energy_density(f, 1.0, p);
        EXPECT_NEAR(energy_density(r * f, 1.0, p), w, 1e-12);
    }
}

TEST(Energy, ZeroShearModulusIsExactlyZero) {
    EXPECT_EQ(energy_density(Mat2::diag(-1.0, 1.0), 0.0, EnergyParams{}), 0.0);
}

TEST(Energy, InversionThrows) {
    EXPECT_ERROR_CODE(energy_density(Mat2::diag(-1.0, 1.0), 1.0, EnergyParams{}), ErrorCode::InvertedElement);
    EXPECT_ERROR_CODE(energy_density(Mat2::diag(1e-7, 1.0), 0.01, EnergyParams{}), ErrorCode::InvertedElement);
}

TEST(Stress, MatchesCentralDifferences) {
    Rng rng(9);
    const EnergyParams p;
    for (int i = 0; i < 50; ++i) {
        const Mat2 f{rng.uniform(0.8, 1.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.8, 1.2)};
        const Mat2 s = energy_stress(f, 1.0, p);
        const double h = 1e-6;
        const double analytic[4] = {s.m00, s.m01, s.m10, s.m11};
        auto nudged = [&](int k, double d) {
            Mat2 m = f;
            double* e[4] = {&m.m00, &m.m01, &m.m10, &m.m11};
            *e[k] += d;
            return m;
        };
        for (int k = 0; k < 4; ++k) {
            const double numeric =
                (energy_density(nudged(k, h), 1.0, p) - energy_density(nudged(k, -h), 1.0, p)) / (2 * h);
            EXPECT_NEAR(analytic[k], numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
        }
    }
}

// Independent per-pixel evaluation of the total cost.
LossBreakdown loss_oracle(const DisplacementField& u, const ScalarField& a, const LabelField& labels,
                          const EnergyParams& p) {
    const int w = u.width(), h = u.height();
    auto dx = [&](const ScalarField& f, int x, int y) {
        if (x == 0) return f(1, y) - f(0, y);
        if (x == w - 1) return f(w - 1, y) - f(w - 2, y);
        return (f(x + 1, y) - f(x - 1, y)) / 2.0;
    };
    auto dy = [&](const ScalarField& f, int x, int y) {
        if (y == 0) return f(x, 1) - f(x, 0);
        if (y == h - 1) return f(x, h - 1) - f(x, h - 2);
        return (f(x, y + 1) - f(x, y - 1)) / 2.0;
    };
    LossBreakdown out;
    long sx = 0, sy = 0, n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Tissue t = labels(x, y);
            if (t == Tissue::Gm || t == Tissue::Wm || t == Tissue::Dgm) {
                sx += x;
                sy += y;
                ++n;
            }
            if (t == Tissue::Background) {
                out.background_penalty += u.ux(x, y) * u.ux(x, y) + u.uy(x, y) * u.uy(x, y);
                continue;
            }
            const double mu = t == Tissue::Csf ? p.mu_csf : p.mu_tissue;
            const double g = std::sqrt(a(x, y));
            out.energy += energy_oracle((1 + dx(u.ux, x, y)) / g, dy(u.ux, x, y) / g, dx(u.uy, x, y) / g,
                                        (1 + dy(u.uy, x, y)) / g, mu, p.bulk_ratio);
        }
    // Round half down: floor(mean + 1/2) except exact halves go to the lower index.
    auto round_half_down = [](long s, long m) { return (2 * s + m - 1) / (2 * m); };
    const int cx = static_cast<int>(round_half_down(sx, n)), cy = static_cast<int>(round_half_down(sy, n));
    out.center_penalty = u.ux(cx, cy) * u.ux(cx, cy) + u.uy(cx, cy) * u.uy(cx, cy);
    out.total = out.energy + p.lambda1 * out.background_penalty + p.lambda2 * out.center_penalty;
    return out;
}

LabelField disk_labels(int n) {
    LabelField l(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double r = std::hypot(x - (n - 1) / 2.0, y - (n - 1) / 2.0);
            l(x, y) = r < n * 0.2 ? Tissue::Wm : r < n * 0.3 ? Tissue::Gm : r < n * 0.4 ? Tissue::Csf : Tissue::Background;
        }
    return l;
}

TEST(TotalLoss, RestStateIsZero) {
    const LabelField l = disk_labels(12);
    const LossBreakdown b = total_loss(DisplacementField(12, 12), ScalarField(12, 12, 1.0), l, EnergyParams{});
    EXPECT_EQ(b.total, 0.0);
    EXPECT_EQ(b.energy, 0.0);
    EXPECT_EQ(b.background_penalty, 0.0);
    EXPECT_EQ(b.center_penalty, 0.0);
}

TEST(TotalLoss, ZeroDisplacementWithAtrophyMatchesOracle) {
    Rng rng(21);
    const LabelField l = disk_labels(14);
    ScalarField a(14, 14);
    for (double& v : a.values()) v = rng.uniform(0.85, 1.05);
    const DisplacementField u(14, 14);
    const LossBreakdown b = total_loss(u, a, l, EnergyParams{});
    const LossBreakdown o = loss_oracle(u, a, l, EnergyParams{});
    EXPECT_EQ(b.background_penalty, 0.0);
    EXPECT_EQ(b.center_penalty, 0.0);
    EXPECT_GT(b.energy, 0.0);
    EXPECT_NEAR(b.energy, o.energy, 1e-12 * o.energy);
}

TEST(TotalLoss, SingleBackgroundPixel) {
    const LabelField l = disk_labels(16);
    ASSERT_EQ(l(0, 0), Tissue::Background);
    DisplacementField u(16, 16);
    u.ux(0, 0) = 0.5;
    const LossBreakdown b = total_loss(u, ScalarField(16, 16, 1.0), l, EnergyParams{});
    EXPECT_EQ(b.background_penalty, 0.25);
    EXPECT_EQ(b.energy, 0.0);
    EXPECT_NEAR(b.total, 0.025, 1e-15);
    const LossBreakdown o = loss_oracle(u, ScalarField(16, 16, 1.0), l, EnergyParams{});
    EXPECT_NEAR(b.total, o.total, 1e-15);
}

TEST(TotalLoss, RandomFieldMatchesOracle) {
    Rng rng(22);
    const LabelField l = disk_labels(15);
    ScalarField a(15, 15);
    DisplacementField u(15, 15);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.uniform(0.85, 1.05);
        u.ux[i] = rng.uniform(-0.1, 0.1);
        u.uy[i] = rng.uniform(-0.1, 0.1);
    }
    EnergyParams p;
    p.lambda2 = 3.0;
    const LossBreakdown b = total_loss(u, a, l, p);
    const LossBreakdown o = loss_oracle(u, a, l, p);
    EXPECT_NEAR(b.energy, o.energy, 1e-11 * o.energy);
    EXPECT_NEAR(b.background_penalty, o.background_penalty, 1e-12);
    EXPECT_EQ(b.center_penalty, o.center_penalty);
    EXPECT_NEAR(b.total, o.total, 1e-11 * o.total);
}

TEST(TotalLoss, Errors) {
    const LabelField l = disk_labels(12);
    EXPECT_ERROR_CODE(total_loss(DisplacementField(12, 12), ScalarField(12, 12, 1.0), LabelField(12, 12, Tissue::Csf),
                                 EnergyParams{}),
                      ErrorCode::EmptyMask);
    DisplacementField fold(12, 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) fold.ux(x, y) = -2.0 * x;  // d ux / dx = -2, J = -1
    EXPECT_ERROR_CODE(total_loss(fold, ScalarField(12, 12, 1.0), l, EnergyParams{}), ErrorCode::InvertedElement);
    EXPECT_ERROR_CODE(total_loss(DisplacementField(12, 13), ScalarField(12, 12, 1.0), l, EnergyParams{}),
                      ErrorCode::ShapeMismatch);
}

}  // namespace
}  // namespace neodeform
