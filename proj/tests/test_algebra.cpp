#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace tdmd;

TEST(StarM, CollapsesToMatrixProductForSingleTube) {
    Tensor3 a(2, 2, 1), b(2, 1, 1);
    a(0, 0, 0) = 1.0;
    a(0, 1, 0) = 2.0;
    a(1, 0, 0) = 3.0;
    a(1, 1, 0) = 4.0;
    b(0, 0, 0) = 1.0;
    b(1, 0, 0) = 1.0;
    const Tensor3 c = star_m(a, b, make_identity(1));
    EXPECT_NEAR(std::abs(c(0, 0, 0) - 3.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(c(1, 0, 0) - 7.0), 0.0, 1e-15);
}

TEST(StarM, MatchesLoopOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        oracle::Rng rng(seed);
        const Index m = rng.integer(1, 5), p = rng.integer(1, 5), s = rng.integer(1, 5), n = rng.integer(1, 5);
        const Tensor3 a = oracle::random_tensor(rng, m, p, n, true);
        const Tensor3 b = oracle::random_tensor(rng, p, s, n, true);
        for (const Transform& t : {make_dct(n), make_dst(n), oracle::random_explicit_transform(rng, n)})
            EXPECT_LT(oracle::rel_diff(oracle::naive_star_m(a, b, t), star_m(a, b, t)), 1e-12);
    }
}

TEST(StarM, DstBlockDiagonalOracle) {
    oracle::Rng rng(2);
    const Transform t = make_dst(4);
    const Tensor3 a = oracle::random_tensor(rng, 3, 2, 4);
    const Tensor3 b = oracle::random_tensor(rng, 2, 2, 4);
    // (M^* ⊗ I) bdiag(Â) unfold(B̂) with the Kronecker factor built by loops.
    const auto ah = oracle::hat_slices(a, t);
    Matrix bd = Matrix::Zero(12, 8);
    for (Index k = 0; k < 4; ++k)
        bd.block(3 * k, 2 * k, 3, 2) = ah[static_cast<std::size_t>(k)];
    Matrix kron = Matrix::Zero(12, 12);
    for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 4; ++c)
            for (Index i = 0; i < 3; ++i)
                kron(3 * r + i, 3 * c + i) = std::conj(t.matrix()(c, r));
    Matrix ubh(8, 2);
    const auto bh = oracle::hat_slices(b, t);
    for (Index k = 0; k < 4; ++k)
        ubh.middleRows(2 * k, 2) = bh[static_cast<std::size_t>(k)];
    const Tensor3 expected = fold(kron * bd * ubh, 3, 4);
    EXPECT_LT(oracle::rel_diff(expected, star_m(a, b, t)), 1e-11);
}

TEST(StarM, DimensionAndTransformErrors) {
    const Transform t = make_dct(3);
    try {
        star_m(Tensor3(2, 3, 3), Tensor3(2, 2, 3), t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_dimension);
    }
    try {
        star_m(Tensor3(2, 2, 4), Tensor3(2, 2, 4), t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_transform);
    }
}

TEST(StarM, AssociativeOnRandomTriples) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        oracle::Rng rng(50 + seed);
        const Index a1 = rng.integer(1, 5), a2 = rng.integer(1, 5), a3 = rng.integer(1, 5), a4 = rng.integer(1, 5);
        const Index n = rng.integer(1, 5);
        const Transform t = seed % 2 == 0 ? make_dct(n) : make_dst(n);
        const Tensor3 a = oracle::random_tensor(rng, a1, a2, n);
        const Tensor3 b = oracle::random_tensor(rng, a2, a3, n);
        const Tensor3 c = oracle::random_tensor(rng, a3, a4, n);
        EXPECT_LT(oracle::rel_diff(star_m(star_m(a, b, t), c, t), star_m(a, star_m(b, c, t), t)), 1e-10);
    }
}

TEST(Identity, DefiningProperty) {
    oracle::Rng rng(8);
    const Transform dct = make_dct(4);
    const Tensor3 a = oracle::random_tensor(rng, 3, 3, 4);
    EXPECT_LT(oracle::rel_diff(a, star_m(a, identity_tensor(3, dct), dct)), 1e-12);
    const Transform dct3 = make_dct(3);
    const Tensor3 b = oracle::random_tensor(rng, 2, 5, 3);
    EXPECT_LT(oracle::rel_diff(b, star_m(identity_tensor(2, dct3), b, dct3)), 1e-12);

    const Tensor3 id_hat = to_transform_domain(dct3, identity_tensor(2, dct3));
    for (Index k = 0; k < 3; ++k)
        EXPECT_LT((id_hat.slice(k) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);

    // With M = I every slice is exactly I_p.
    const Tensor3 plain = identity_tensor(3, make_identity(2));
    for (Index k = 0; k < 2; ++k)
        EXPECT_TRUE(plain.slice(k) == Matrix::Identity(3, 3));
}

TEST(ConjTranspose, MatrixCaseInvolutionAndProductRule) {
    oracle::Rng rng(9);
    const Tensor3 a1 = oracle::random_tensor(rng, 3, 2, 1);
    const Tensor3 at = conj_transpose(a1, make_identity(1));
    EXPECT_TRUE(at.slice(0) == a1.slice(0).transpose());

    const Transform t = make_dct(4);
    const Tensor3 a = oracle::random_tensor(rng, 3, 2, 4, true);
    const Tensor3 b = oracle::random_tensor(rng, 2, 5, 4, true);
    EXPECT_LT(oracle::rel_diff(a, conj_transpose(conj_transpose(a, t), t)), 1e-12);
    EXPECT_LT(oracle::rel_diff(conj_transpose(star_m(a, b, t), t),
                               star_m(conj_transpose(b, t), conj_transpose(a, t), t)),
              1e-12);
}

namespace {

struct PenroseResiduals {
    double axa = 0, xax = 0, ax_herm = 0, xa_herm = 0;
};

PenroseResiduals penrose(const Tensor3& a, const Tensor3& x, const Transform& t) {
    PenroseResiduals r;
    const Tensor3 ax = star_m(a, x, t), xa = star_m(x, a, t);
    const double na = std::max(a.norm(), 1e-300), nx = std::max(x.norm(), 1e-300);
    r.axa = (star_m(ax, a, t) - a).norm() / na;
    r.xax = (star_m(xa, x, t) - x).norm() / nx;
    r.ax_herm = (conj_transpose(ax, t) - ax).norm() / std::max(ax.norm(), 1e-300);
    r.xa_herm = (conj_transpose(xa, t) - xa).norm() / std::max(xa.norm(), 1e-300);
    return r;
}

} // namespace

TEST(Pinv, IdentityAndZero) {
    const Transform t = make_dct(3);
    const Tensor3 id = identity_tensor(4, t);
    EXPECT_LT(oracle::rel_diff(id, pinv(id, t)), 1e-12);
    EXPECT_TRUE(pinv(Tensor3(3, 2, 3), t).is_zero());
}

TEST(Pinv, PenroseConditionsWithRankDeficientSlices) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        oracle::Rng rng(300 + seed);
        const Index m = rng.integer(2, 6), p = rng.integer(2, 6), n = rng.integer(1, 4);
        Tensor3 a(m, p, n, Domain::transform);
        for (Index k = 0; k < n; ++k) {
            const Index r = rng.integer(0, std::min(m, p));
            a.slice(k) = oracle::random_matrix(rng, m, r) * oracle::random_matrix(rng, r, p);
        }
        const Tensor3 x = facewise::pinv(a);
        for (Index k = 0; k < n; ++k) {
            const Matrix as = a.slice(k), xs = x.slice(k);
            const Matrix ax = as * xs, xa = xs * as;
            const double na = std::max(as.norm(), 1e-300), nx = std::max(xs.norm(), 1e-300);
            EXPECT_LT((ax * as - as).norm() / na, 1e-10);
            EXPECT_LT((xa * xs - xs).norm() / nx, 1e-10);
            EXPECT_LT((ax.adjoint() - ax).norm() / std::max(ax.norm(), 1e-300), 1e-10);
            EXPECT_LT((xa.adjoint() - xa).norm() / std::max(xa.norm(), 1e-300), 1e-10);
        }
    }
}

TEST(Pinv, TensorPenroseConditionsAboveRoundOff) {
    // Deficient slices pick up round-off on the way through the standard domain, so this
    // check passes a tolerance above that noise. Zero slices are covered facewise above.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        oracle::Rng rng(400 + seed);
        const Index m = rng.integer(2, 6), p = rng.integer(2, 6), n = rng.integer(1, 4);
        const Transform t = make_dct(n);
        std::vector<Matrix> slices;
        for (Index k = 0; k < n; ++k) {
            const Index r = rng.integer(1, std::min(m, p));
            slices.push_back(oracle::random_matrix(rng, m, r) * oracle::random_matrix(rng, r, p));
        }
        const Tensor3 a = oracle::from_hat_slices(slices, t);
        const PenroseResiduals r = penrose(a, pinv(a, t, 1e-9), t);
        EXPECT_LT(r.axa, 1e-10);
        EXPECT_LT(r.xax, 1e-10);
        EXPECT_LT(r.ax_herm, 1e-10);
        EXPECT_LT(r.xa_herm, 1e-10);
    }
}

TEST(Pinv, FullRankMatchesDenseSvdOracle) {
    oracle::Rng rng(17);
    const Transform t = make_dct(2);
    const Tensor3 a = oracle::random_tensor(rng, 4, 3, 2);
    const Tensor3 x = pinv(a, t);
    std::vector<Matrix> expected;
    for (const Matrix& s : oracle::hat_slices(a, t))
        expected.push_back(s.completeOrthogonalDecomposition().pseudoInverse());
    EXPECT_LT(oracle::rel_diff(oracle::from_hat_slices(expected, t), x), 1e-10);
}

TEST(StructuredMatrix, IdentityTransformIsBlockDiagonal) {
    oracle::Rng rng(12);
    const Tensor3 a = oracle::random_tensor(rng, 2, 3, 3);
    const Matrix s = to_structured_matrix(a, make_identity(3));
    Matrix expected = Matrix::Zero(6, 9);
    for (Index k = 0; k < 3; ++k)
        expected.block(2 * k, 3 * k, 2, 3) = a.slice(k);
    EXPECT_TRUE(s == expected);
}

TEST(StructuredMatrix, IdentityTensorGivesIdentity) {
    const Transform t = make_dst(3);
    const Matrix s = to_structured_matrix(identity_tensor(4, t), t);
    EXPECT_LT((s - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StructuredMatrix, ActsLikeStarProductAndIsLinear) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        oracle::Rng rng(400 + seed);
        const Index m = rng.integer(1, 5), p = rng.integer(1, 5), s = rng.integer(1, 4), n = rng.integer(1, 4);
        const Transform t = seed % 3 == 0 ? make_dct(n) : seed % 3 == 1 ? make_dst(n) : oracle::random_explicit_transform(rng, n);
        const Tensor3 a = oracle::random_tensor(rng, m, p, n);
        const Tensor3 a2 = oracle::random_tensor(rng, m, p, n);
        const Tensor3 b = oracle::random_tensor(rng, p, s, n);
        EXPECT_LT(oracle::rel_diff(unfold(oracle::naive_star_m(a, b, t)), to_structured_matrix(a, t) * unfold(b)), 1e-11);
        const cplx alpha(0.3, -1.1), beta(2.0, 0.5);
        const Matrix lhs = to_structured_matrix(alpha * a + beta * a2, t);
        const Matrix rhs = alpha * to_structured_matrix(a, t) + beta * to_structured_matrix(a2, t);
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    }
}

TEST(Norm, TransformDomainNormMatches) {
    oracle::Rng rng(13);
    const Tensor3 a = oracle::random_tensor(rng, 4, 3, 5, true);
    const Transform t = oracle::random_explicit_transform(rng, 5);
    EXPECT_NEAR(to_transform_domain(t, a).norm(), a.norm(), 1e-12 * a.norm());
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
    oracle::Rng rng(14);
    const Transform t = make_dct(6);
    const Tensor3 a = oracle::random_tensor(rng, 5, 4, 6);
    const Tensor3 b = oracle::random_tensor(rng, 4, 3, 6);
    set_num_threads(1);
    const Tensor3 serial = star_m(a, b, t);
    set_num_threads(3);
    const Tensor3 parallel = star_m(a, b, t);
    set_num_threads(1);
    EXPECT_TRUE(serial == parallel);
}

TEST(Parallel, ExceptionsInsideSlicesPropagate) {
    set_num_threads(2);
    EXPECT_THROW(for_each_slice(4, [](Index k) {
                     if (k == 2)
                         throw Error(ErrorCode::invalid_parameter, "slice failure");
                 }),
                 Error);
    set_num_threads(1);
}
