#include <gtest/gtest.h>

#include "neodeform/metrics.hpp"
#include "neodeform/phantom.hpp"
#include "neodeform/random.hpp"
#include "test_util.hpp"

namespace neodeform {
namespace {

LabelField block_labels(int n) {
    LabelField l(n, n, Tissue::Background);
    for (int y = 1; y < n - 1; ++y)
        for (int x = 1; x < n - 1; ++x) l(x, y) = Tissue::Wm;
    return l;
}

TEST(MseAtrophy, Examples) {
    const LabelField l = block_labels(8);
    EXPECT_EQ(mse_atrophy(ScalarField(8, 8, 1.0), DisplacementField(8, 8), l, true), 0.0);
    EXPECT_NEAR(mse_atrophy(ScalarField(8, 8, 0.9), DisplacementField(8, 8), l, true), 0.01, 1e-15);
    EXPECT_NEAR(mse_atrophy(ScalarField(8, 8, 0.9), DisplacementField(8, 8), l, false), 0.01, 1e-15);
}

TEST(MseAtrophy, ContractionFieldMatchesUniformMap) {
    const int n = 12;
    const double g = 0.9;
    DisplacementField u(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            u.ux(x, y) = (g - 1) * (x - 5.5);
            u.uy(x, y) = (g - 1) * (y - 5.5);
        }
    EXPECT_LT(mse_atrophy(ScalarField(n, n, 0.81), u, block_labels(n), true), 1e-10);
}

TEST(MseAtrophy, MaskedIgnoresOutsideBrain) {
    LabelField l = block_labels(6);
    ScalarField a(6, 6, 1.0);
    a(0, 0) = 0.5;
    EXPECT_EQ(mse_atrophy(a, DisplacementField(6, 6), l, true), 0.0);
    EXPECT_NEAR(mse_atrophy(a, DisplacementField(6, 6), l, false), 0.25 / 36, 1e-15);
}

TEST(MseAtrophy, EmptyMaskThrows) {
    EXPECT_ERROR_CODE(mse_atrophy(ScalarField(4, 4, 1.0), DisplacementField(4, 4), LabelField(4, 4), true),
                      ErrorCode::EmptyMask);
}

TEST(MseImage, Examples) {
    Rng rng(1);
    ScalarField x(5, 5);
    for (double& v : x.values()) v = rng.uniform();
    EXPECT_EQ(mse_image(x, x), 0.0);
    EXPECT_EQ(mse_image(ScalarField(3, 3, 0.0), ScalarField(3, 3, 0.5)), 0.25);
    EXPECT_EQ(mse_image(x, warp_image(x, DisplacementField(5, 5))), 0.0);
    EXPECT_ERROR_CODE(mse_image(ScalarField(3, 3), ScalarField(3, 4)), ErrorCode::ShapeMismatch);
}

TEST(Dice, Examples) {
    const PhantomCase pc = make_case(32, 3);
    for (Tissue t : {Tissue::Csf, Tissue::Gm, Tissue::Wm, Tissue::Dgm}) EXPECT_EQ(dice(pc.labels, pc.labels, t), 1.0);

    LabelField a(20, 10), b(20, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            a(x, y) = Tissue::Gm;
            b(x + 10, y) = Tissue::Gm;
        }
    EXPECT_EQ(dice(a, b, Tissue::Gm), 0.0);

    // |X| = |Y| = 100 with 80 shared pixels.
    LabelField c(20, 10), d(20, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            c(x, y) = Tissue::Wm;
            d(x + 2, y) = Tissue::Wm;
        }
    EXPECT_NEAR(dice(c, d, Tissue::Wm), 0.8, 1e-15);
}

TEST(Dice, SymmetricOnRandomMaps) {
    Rng rng(4);
    LabelField x(16, 16), y(16, 16);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<Tissue>(rng.index(kTissueCount));
        y[i] = static_cast<Tissue>(rng.index(kTissueCount));
    }
    for (int t = 0; t < kTissueCount; ++t) {
        const double v = dice(x, y, static_cast<Tissue>(t));
        EXPECT_EQ(v, dice(y, x, static_cast<Tissue>(t)));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Dice, AbsentClassCountsAsAgreement) {
    EXPECT_EQ(dice(LabelField(4, 4), LabelField(4, 4), Tissue::Dgm), 1.0);
}

}  // namespace
}  // namespace neodeform
