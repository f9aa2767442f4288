#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace tdmd;

TEST(Tensor3, LayoutIsRowsThenLateralThenFrontal) {
    Tensor3 x(2, 3, 4);
    x(1, 2, 3) = cplx(7.0, -1.0);
    EXPECT_EQ(x.data()[1 + 2 * (2 + 3 * 3)], cplx(7.0, -1.0));
    EXPECT_EQ(x.slice(3)(1, 2), cplx(7.0, -1.0));
    EXPECT_EQ(x.fibers()(1 + 2 * 2, 3), cplx(7.0, -1.0));
}

TEST(Tensor3, NegativeExtentThrows) {
    try {
        Tensor3 x(-1, 2, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_dimension);
    }
}

TEST(Tensor3, NormMatchesEntrySum) {
    oracle::Rng rng(3);
    const Tensor3 x = oracle::random_tensor(rng, 3, 4, 2, true);
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        acc += std::norm(x.data()[i]);
    EXPECT_NEAR(x.norm(), std::sqrt(acc), 1e-14 * std::sqrt(acc));
    EXPECT_NEAR(x.squared_norm(), acc, 1e-13 * acc);
}

TEST(Unfold, StacksColumnsRowIndexFastest) {
    Tensor3 x(2, 1, 2);
    x(0, 0, 0) = 1.0;
    x(1, 0, 0) = 2.0;
    x(0, 0, 1) = 3.0;
    x(1, 0, 1) = 4.0;
    const Matrix u = unfold(x);
    ASSERT_EQ(u.rows(), 4);
    ASSERT_EQ(u.cols(), 1);
    for (int i = 0; i < 4; ++i)
        EXPECT_EQ(u(i, 0), cplx(i + 1.0, 0.0));
}

TEST(Unfold, FoldRoundTripIsBitExact) {
    oracle::Rng rng(5);
    const Tensor3 x = oracle::random_tensor(rng, 3, 4, 2, true);
    EXPECT_TRUE(fold(unfold(x), 3, 2) == x);
}

TEST(Unfold, KroneckerIdentityWithDct) {
    oracle::Rng rng(7);
    const Tensor3 x = oracle::random_tensor(rng, 2, 2, 3);
    const Transform t = make_dct(3);
    // (M ⊗ I_m) built entry by entry.
    Matrix kron = Matrix::Zero(6, 6);
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b)
            for (Index i = 0; i < 2; ++i)
                kron(a * 2 + i, b * 2 + i) = t.matrix()(a, b);
    const Matrix lhs = kron * unfold(x);
    const Matrix rhs = unfold(oracle::from_hat_slices(oracle::hat_slices(x, t), make_identity(3)));
    EXPECT_LT(oracle::rel_diff(lhs, rhs), 1e-14);
    EXPECT_LT(oracle::rel_diff(lhs, unfold(to_transform_domain(t, x))), 1e-14);
}

TEST(Tensor3, LateralRangesAndStateReshape) {
    oracle::Rng rng(9);
    const Tensor3 x = oracle::random_tensor(rng, 3, 5, 2);
    const Tensor3 mid = x.lateral_range(1, 3);
    EXPECT_EQ(mid.cols(), 3);
    EXPECT_EQ(mid(2, 0, 1), x(2, 1, 1));
    Tensor3 y(3, 5, 2);
    y.set_lateral_range(1, mid);
    EXPECT_EQ(y(2, 3, 1), x(2, 3, 1));
    EXPECT_EQ(y(0, 0, 0), cplx(0.0));
    EXPECT_THROW(x.lateral_range(4, 2), Error);

    const Vector state = unfold(x).col(2);
    EXPECT_TRUE(lateral_from_state(state, 3, 2) == x.lateral(2));
    EXPECT_TRUE(unfold(lateral_from_state(state, 3, 2)) == Matrix(state));
}

TEST(Tensor3, ArithmeticAndShapeChecks) {
    oracle::Rng rng(11);
    const Tensor3 a = oracle::random_tensor(rng, 2, 3, 2);
    const Tensor3 b = oracle::random_tensor(rng, 2, 3, 2);
    const Tensor3 c = a + b - b;
    EXPECT_LT(oracle::rel_diff(a, c), 1e-15);
    EXPECT_LT(oracle::rel_diff(cplx(2.0) * a, a + a), 1e-15);
    Tensor3 d(2, 2, 2);
    EXPECT_THROW(d += a, Error);
    EXPECT_TRUE(Tensor3(2, 2, 2).is_zero());
    EXPECT_TRUE(a.is_real());
}
