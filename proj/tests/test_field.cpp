#include <gtest/gtest.h>

#include "neodeform/field.hpp"
#include "neodeform/random.hpp"
#include "test_util.hpp"

namespace neodeform {
namespace {

DisplacementField linear_field(int w, int h, double axx, double axy, double ayx, double ayy, double cx = 0,
                               double cy = 0) {
    DisplacementField u(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            u.ux(x, y) = axx * (x - cx) + axy * (y - cy);
            u.uy(x, y) = ayx * (x - cx) + ayy * (y - cy);
        }
    return u;
}

TEST(Grid, RejectsDegenerateShapes) {
    EXPECT_ERROR_CODE(ScalarField(1, 4), ErrorCode::InvalidArgument);
    EXPECT_ERROR_CODE(ScalarField(4, 0), ErrorCode::InvalidArgument);
    EXPECT_THROW(ScalarField(3, 3, std::vector<double>(8)), Error);
}

TEST(Grid, RowMajorIndexing) {
    ScalarField f(3, 2);
    f(2, 1) = 7.0;
    EXPECT_EQ(f[5], 7.0);
    EXPECT_EQ(f.index(1, 1), 4u);
}

TEST(Labels, MakeLabelsValidatesRange) {
    const std::uint8_t ok[] = {0, 1, 2, 3, 4, 0};
    EXPECT_EQ(make_labels(3, 2, ok)(0, 1), Tissue::Wm);
    const std::uint8_t bad[] = {0, 1, 2, 3, 5, 0};
    EXPECT_THROW(make_labels(3, 2, bad), Error);
}

TEST(Stencils, ZeroFieldGivesZeroGradient) {
    const TensorField g = gradient_field(DisplacementField(5, 4));
    for (const Mat2& m : g.values()) EXPECT_EQ(m, Mat2{});
}

TEST(Stencils, LinearXFieldIsExactInside) {
    const TensorField g = gradient_field(linear_field(6, 5, 0.1, 0, 0, 0));
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 5; ++x) {
            EXPECT_NEAR(g(x, y).m00, 0.1, 1e-15);
            EXPECT_EQ(g(x, y).m01, 0.0);
            EXPECT_EQ(g(x, y).m10, 0.0);
            EXPECT_EQ(g(x, y).m11, 0.0);
        }
}

TEST(Stencils, LinearYFieldIncludingBoundaryRows) {
    const TensorField g = gradient_field(linear_field(4, 4, 0, 0, 0, 0.2));
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_NEAR(g(x, y).m11, 0.2, 1e-15) << x << "," << y;
}

TEST(Stencils, OneSidedAtEdges) {
    ScalarField f(4, 2);
    const double row[] = {1.0, 4.0, 9.0, 16.0};
    for (int x = 0; x < 4; ++x) f(x, 0) = f(x, 1) = row[x];
    const ScalarField d = diff_x(f);
    EXPECT_EQ(d(0, 0), 3.0);
    EXPECT_EQ(d(1, 0), 4.0);
    EXPECT_EQ(d(2, 0), 6.0);
    EXPECT_EQ(d(3, 0), 7.0);
}

// <D f, g> == <f, D^T g> for random f, g.
TEST(Stencils, AdjointsAreTransposes) {
    Rng rng(11);
    for (auto [w, h] : {std::pair{2, 2}, std::pair{3, 5}, std::pair{7, 4}}) {
        ScalarField f(w, h), g(w, h);
        for (std::size_t i = 0; i < f.size(); ++i) {
            f[i] = rng.uniform(-1, 1);
            g[i] = rng.uniform(-1, 1);
        }
        auto dot = [](const ScalarField& a, const ScalarField& b) {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return s;
        };
        EXPECT_NEAR(dot(diff_x(f), g), dot(f, diff_x_adjoint(g)), 1e-12);
        EXPECT_NEAR(dot(diff_y(f), g), dot(f, diff_y_adjoint(g)), 1e-12);
    }
}

TEST(DeformationGradient, ZeroIsIdentity) {
    const TensorField f = deformation_gradient(DisplacementField(4, 4));
    for (const Mat2& m : f.values()) EXPECT_EQ(m, Mat2::identity());
}

TEST(DeformationGradient, ContractionAndShear) {
    const TensorField c = deformation_gradient(linear_field(8, 8, -0.1, 0, 0, -0.1, 3.5, 3.5));
    for (int y = 1; y < 7; ++y)
        for (int x = 1; x < 7; ++x) {
            EXPECT_NEAR(c(x, y).m00, 0.9, 1e-15);
            EXPECT_NEAR(c(x, y).m11, 0.9, 1e-15);
            EXPECT_EQ(c(x, y).m01, 0.0);
        }
    const TensorField s = deformation_gradient(linear_field(5, 5, 0, 0.05, 0, 0));
    for (const Mat2& m : s.values()) {
        EXPECT_NEAR(m.m01, 0.05, 1e-15);
        EXPECT_EQ(m.m00, 1.0);
        EXPECT_EQ(m.m11, 1.0);
        EXPECT_EQ(m.m10, 0.0);
    }
}

TEST(JacobianDet, Examples) {
    EXPECT_EQ(jacobian_det(TensorField(3, 3, Mat2::identity()))(1, 1), 1.0);
    EXPECT_NEAR(jacobian_det(TensorField(3, 3, Mat2::diag(0.9, 0.9)))(0, 2), 0.81, 1e-15);
    EXPECT_NEAR(jacobian_det(TensorField(3, 3, Mat2::diag(1.1, 1.0)))(2, 0), 1.1, 1e-15);
}

TEST(WarpImage, ZeroDisplacementIsBitExact) {
    Rng rng(2);
    ScalarField img(9, 7);
    for (double& v : img.values()) v = rng.uniform();
    EXPECT_EQ(warp_image(img, DisplacementField(9, 7)), img);
}

TEST(WarpImage, UnitShiftOfRamp) {
    ScalarField img(6, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 6; ++x) img(x, y) = x;
    DisplacementField u(6, 3);
    for (double& v : u.ux.values()) v = 1.0;
    const ScalarField out = warp_image(img, u);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 6; ++x) EXPECT_EQ(out(x, y), x + 1 <= 5 ? x + 1.0 : 0.0);
}

TEST(WarpImage, ConstantImageStaysConstantInBounds) {
    Rng rng(5);
    const ScalarField img(10, 10, 0.37);
    DisplacementField u(10, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            u.ux(x, y) = rng.uniform(-x, 9 - x);
            u.uy(x, y) = rng.uniform(-y, 9 - y);
        }
    const ScalarField out = warp_image(img, u);
    for (double v : out.values()) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(WarpImage, OutputStaysWithinInputRange) {
    Rng rng(8);
    ScalarField img(12, 9);
    for (double& v : img.values()) v = rng.uniform(0.2, 0.8);
    DisplacementField u(12, 9);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u.ux[i] = rng.uniform(-3, 3);
        u.uy[i] = rng.uniform(-3, 3);
    }
    const ScalarField out = warp_image(img, u);
    for (double v : out.values()) {
        EXPECT_TRUE(v == 0.0 || (v >= 0.2 - 1e-15 && v <= 0.8 + 1e-15)) << v;
    }
}

TEST(Warp, ShapeMismatchThrows) {
    EXPECT_ERROR_CODE(warp_image(ScalarField(4, 4), DisplacementField(4, 5)), ErrorCode::ShapeMismatch);
    EXPECT_ERROR_CODE(warp_labels(LabelField(3, 4), DisplacementField(4, 4)), ErrorCode::ShapeMismatch);
}

TEST(WarpLabels, Examples) {
    LabelField labels(5, 4);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<Tissue>(i % kTissueCount);
    EXPECT_EQ(warp_labels(labels, DisplacementField(5, 4)), labels);

    DisplacementField small(5, 4);
    for (double& v : small.ux.values()) v = 0.4;
    EXPECT_EQ(warp_labels(labels, small), labels);

    DisplacementField out(5, 4);
    for (double& v : out.ux.values()) v = 5.0;
    const LabelField gone = warp_labels(labels, out);
    for (Tissue t : gone.values()) EXPECT_EQ(t, Tissue::Background);
}

TEST(WarpLabels, HalfRoundsAwayFromZero) {
    LabelField labels(4, 2);
    labels(2, 0) = Tissue::Wm;
    DisplacementField u(4, 2);
    u.ux(1, 0) = 0.5;  // samples x = 1.5 -> 2
    EXPECT_EQ(warp_labels(labels, u)(1, 0), Tissue::Wm);
}

TEST(CenterOfMass, Examples) {
    LabelField l(6, 6);
    l(3, 4) = Tissue::Gm;
    EXPECT_EQ(center_of_mass(l, kBrainTissues), (Pixel{3, 4}));

    LabelField pair(4, 2);
    pair(0, 0) = pair(2, 0) = Tissue::Wm;
    EXPECT_EQ(center_of_mass(pair, kBrainTissues), (Pixel{1, 0}));

    LabelField tie(4, 2);
    tie(0, 0) = tie(1, 0) = Tissue::Dgm;
    EXPECT_EQ(center_of_mass(tie, kBrainTissues), (Pixel{0, 0}));
}

TEST(CenterOfMass, EmptyMaskThrows) {
    LabelField l(4, 4, Tissue::Csf);
    EXPECT_ERROR_CODE(center_of_mass(l, kBrainTissues), ErrorCode::EmptyMask);
}

}  // namespace
}  // namespace neodeform
