#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tdmd/dmd.hpp"

namespace tdmd {

/// Independent, reproducible generator for (seed, stream).
inline std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x7d4du};
    return std::mt19937_64(seq);
}

inline RealMatrix standard_gaussian(Index rows, Index cols, std::mt19937_64& gen) {
    std::normal_distribution<double> dist(0.0, 1.0);
    RealMatrix g(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            g(r, c) = dist(gen);
    return g;
}

/// Random Gaussian tensor: every transform-domain slice equals one standard Gaussian matrix.
struct GaussianTensor {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    RealMatrix base;
    Tensor3 tensor;
};

inline GaussianTensor make_gaussian_tensor(Index rows, Index cols, const Transform& t, std::uint64_t seed,
                                           std::uint64_t stream) {
    auto gen = make_substream(seed, stream);
    GaussianTensor g{seed, stream, standard_gaussian(rows, cols, gen), Tensor3()};
    Tensor3 hat(rows, cols, t.size(), Domain::transform);
    for (Index j = 0; j < t.size(); ++j)
        hat.slice(j) = g.base.cast<cplx>();
    g.tensor = to_standard_domain(t, hat);
    return g;
}

/**
 * Single-view sketches Y1 = C ⋆ G1 and Y2 = G2 ⋆ C of a snapshot tensor that
 * arrives in batches. Y1 and Y2 are kept in the standard domain.
 */
struct SketchState {
    Transform transform = make_identity(1);
    Index m = 0, p = 0, n = 0;
    Index rho1 = 0, rho2 = 0;
    GaussianTensor g1; ///< p x rho1 x n
    GaussianTensor g2; ///< rho2 x m x n
    Tensor3 y1;        ///< m x rho1 x n
    Tensor3 y2;        ///< rho2 x p x n
    Index batches_seen = 0;
    Index states_seen = 0; ///< one past the last nonzero lateral slice folded in

    long long sketch_storage() const { return static_cast<long long>(n) * (m * rho1 + p * rho2); }
    long long random_storage() const { return static_cast<long long>(p * rho1 + m * rho2); }
};

/// rho1 = rho_max, rho2 = 2 rho1 + 1; G1 and G2 come from substreams 1 and 2 of seed.
inline SketchState init_sketch(Index m, Index p, Index n, Index rho_max, const Transform& t, std::uint64_t seed) {
    detail::require(m >= 1 && p >= 1 && n == t.size(), ErrorCode::invalid_dimension, "sketch shape does not match transform");
    detail::require(rho_max >= 1 && rho_max <= std::min(m, p), ErrorCode::invalid_parameter,
                    "rho_max must lie in [1, min(m, p)] = [1, " + std::to_string(std::min(m, p)) + "]");
    SketchState s;
    s.transform = t;
    s.m = m;
    s.p = p;
    s.n = n;
    s.rho1 = rho_max;
    s.rho2 = 2 * rho_max + 1;
    s.g1 = make_gaussian_tensor(p, s.rho1, t, seed, 1);
    s.g2 = make_gaussian_tensor(s.rho2, m, t, seed, 2);
    s.y1 = Tensor3(m, s.rho1, n);
    s.y2 = Tensor3(s.rho2, p, n);
    return s;
}

/// Folds one batch into both sketches; the batch may be discarded afterwards.
inline SketchState& update_sketch(SketchState& s, const Tensor3& batch) {
    detail::require(batch.rows() == s.m && batch.cols() == s.p && batch.tubes() == s.n, ErrorCode::invalid_dimension,
                    "batch shape " + batch.shape_string() + " does not match the sketch");
    const Tensor3 c_hat = to_transform_domain(s.transform, batch);
    Tensor3 d1(s.m, s.rho1, s.n, Domain::transform);
    Tensor3 d2(s.rho2, s.p, s.n, Domain::transform);
    const Matrix b1 = s.g1.base.cast<cplx>();
    const Matrix b2 = s.g2.base.cast<cplx>();
    for_each_slice(s.n, [&](Index j) {
        d1.slice(j).noalias() = c_hat.slice(j) * b1;
        d2.slice(j).noalias() = b2 * c_hat.slice(j);
    });
    s.y1 += to_standard_domain(s.transform, d1);
    s.y2 += to_standard_domain(s.transform, d2);
    s.batches_seen += 1;
    for (Index j = s.p - 1; j >= s.states_seen; --j) {
        bool nonzero = false;
        for (Index k = 0; k < s.n && !nonzero; ++k)
            nonzero = !batch.slice(k).col(j).isZero(0.0);
        if (nonzero) {
            s.states_seen = j + 1;
            break;
        }
    }
    return s;
}

namespace detail {

struct SketchFactors {
    Tensor3 q1_hat; ///< m x rho1 x n
    Tensor3 b_hat;  ///< rho1 x p x n
};

inline SketchFactors sketch_factors(const SketchState& s) {
    detail::require(!s.y1.is_zero() && !s.y2.is_zero(), ErrorCode::degenerate_input,
                    "sketches are zero; process a nonzero batch first");
    SketchFactors f;
    f.q1_hat = facewise::qr(to_transform_domain(s.transform, s.y1)).Q;
    const Tensor3 y2_hat = to_transform_domain(s.transform, s.y2);
    const Matrix b2 = s.g2.base.cast<cplx>();
    f.b_hat = Tensor3(f.q1_hat.cols(), s.p, s.n, Domain::transform);
    for_each_slice(s.n, [&](Index j) {
        const Matrix core = b2 * f.q1_hat.slice(j);
        f.b_hat.slice(j).noalias() =
            facewise::pinv(core, facewise::default_pinv_tolerance(core.rows(), core.cols())) * y2_hat.slice(j);
    });
    return f;
}

} // namespace detail

/// Intermediate approximation Q1 ⋆ B of everything folded in so far.
inline Tensor3 sketch_approximation(const SketchState& s) {
    detail::SketchFactors f = detail::sketch_factors(s);
    return to_standard_domain(s.transform, facewise::product(f.q1_hat, f.b_hat));
}

/// Q1 from the QR of Y1, B = (G2 ⋆ Q1)^† ⋆ Y2, tr-tSVDMII of B, U = Q1 ⋆ U1.
inline TSvdM reconstruct_lowrank(const SketchState& s, double gamma) {
    detail::SketchFactors f = detail::sketch_factors(s);
    TSvdM inner = tr_tsvdm2(to_standard_domain(s.transform, f.b_hat), s.transform, gamma);
    TSvdM out = std::move(inner);
    out.U_hat = facewise::product(f.q1_hat, out.U_hat);
    out.U = to_standard_domain(s.transform, out.U_hat);
    return out;
}

namespace detail {

inline Tensor3 leading_rows(const Tensor3& a, Index rows) {
    Tensor3 out(rows, a.cols(), a.tubes(), a.domain());
    for (Index k = 0; k < a.tubes(); ++k)
        out.slice(k) = a.slice(k).topRows(rows);
    return out;
}

inline DmdModel lowrank_dmd_hat(const Tensor3& u_hat, const Tensor3& s_hat, const Tensor3& v_hat,
                                const std::vector<Index>& multirank, const Transform& t) {
    const Index m = u_hat.rows(), k = u_hat.cols(), p = v_hat.rows(), n = u_hat.tubes();
    detail::require(p >= 2, ErrorCode::insufficient_data, "need at least two states to form X and Y");
    detail::require(s_hat.rows() == k && s_hat.cols() == k && v_hat.cols() == k && v_hat.tubes() == n &&
                        s_hat.tubes() == n,
                    ErrorCode::invalid_dimension, "U, S, V do not conform");

    const Tensor3 vt = facewise::adjoint(v_hat); // k x p
    const Tensor3 b_prev = vt.lateral_range(0, p - 1);
    const Tensor3 b_next = vt.lateral_range(1, p - 1);
    const Tensor3 sb = facewise::product(s_hat, b_prev); // k x (p-1)

    std::vector<SliceSvd> svds = facewise::svd(sb);
    const Index q = std::min(k, p - 1);
    std::vector<Index> keep(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
        keep[static_cast<std::size_t>(j)] = std::min(multirank[static_cast<std::size_t>(j)], q);
    const Index r = *std::max_element(keep.begin(), keep.end());

    Tensor3 ut(k, r, n, Domain::transform), sp(r, r, n, Domain::transform), vp(p - 1, r, n, Domain::transform);
    for (Index j = 0; j < n; ++j) {
        const SliceSvd& f = svds[static_cast<std::size_t>(j)];
        const Index kj = keep[static_cast<std::size_t>(j)];
        ut.slice(j).leftCols(kj) = f.U.leftCols(kj);
        vp.slice(j).leftCols(kj) = f.V.leftCols(kj);
        for (Index i = 0; i < kj; ++i)
            sp(i, i, j) = f.s(i);
    }
    const Tensor3 u_prime = facewise::product(u_hat, ut); // m x r
    // K = U'^* ⋆ U ⋆ S ⋆ B'' ⋆ V' ⋆ S'^† = Ũ^* ⋆ S ⋆ B'' ⋆ V' ⋆ S'^† since U has orthonormal slices.
    const Tensor3 lhs = facewise::product(facewise::product(u_prime, u_hat, facewise::Op::adjoint), s_hat);
    const Tensor3 k_hat =
        facewise::product(facewise::product(facewise::product(lhs, b_next), vp), diagonal_pinv(sp));

    Tensor3 x0_hat(m, 1, n, Domain::transform);
    for (Index j = 0; j < n; ++j)
        x0_hat.slice(j) = u_hat.slice(j) * s_hat.slice(j) * vt.slice(j).col(0);

    DmdModel model = finish_model(DmdMethod::starm_dmd2, u_prime, k_hat, keep, x0_hat, t);
    model.storage_flns = storage_count(DmdMethod::starm_dmd2, m, n, keep, t.storage_cost());
    return model;
}

} // namespace detail

/**
 * ⋆_M-DMD from a low-rank approximation C ≈ U ⋆ S ⋆ V^*.
 *
 * B' and B'' are V^* without its last and first lateral slice, so that
 * X ≈ U ⋆ S ⋆ B' and Y ≈ U ⋆ S ⋆ B''. The thin SVD of S ⋆ B' supplies the
 * basis U' = U ⋆ Ũ; the rest follows ⋆_M-DMD.
 */
inline DmdModel lowrank_dmd(const TSvdM& f, const Transform& t) {
    return detail::lowrank_dmd_hat(f.U_hat, f.S_hat, f.V_hat, f.multirank, t);
}

/// Same, from bare standard-domain factors; slice ranks are read off S.
inline DmdModel lowrank_dmd(const Tensor3& u, const Tensor3& s, const Tensor3& v, const Transform& t) {
    Tensor3 s_hat = to_transform_domain(t, s);
    const Index k = std::min(s_hat.rows(), s_hat.cols());
    std::vector<Index> multirank(static_cast<std::size_t>(s_hat.tubes()), 0);
    for (Index j = 0; j < s_hat.tubes(); ++j) {
        double smax = 0.0;
        for (Index i = 0; i < k; ++i)
            smax = std::max(smax, std::abs(s_hat(i, i, j)));
        // Padding in the transform domain comes back as roundoff; drop it.
        const double cutoff = 64.0 * std::numeric_limits<double>::epsilon() * smax;
        Index r = 0;
        for (Index i = 0; i < k; ++i)
            if (std::abs(s_hat(i, i, j)) > cutoff)
                r = i + 1;
        multirank[static_cast<std::size_t>(j)] = r;
    }
    return detail::lowrank_dmd_hat(to_transform_domain(t, u), s_hat, to_transform_domain(t, v), multirank, t);
}

struct StreamingResult {
    DmdModel model;
    std::vector<DmdModel> intermediates; ///< one per batch when requested
    std::vector<Index> states_seen;      ///< states covered after each batch
    SketchState sketch;
};

/**
 * Streaming ⋆_M-DMD. After each batch the sketches are updated and, when
 * needed, the low-rank factors are rebuilt and turned into a DMD model over
 * the states seen so far.
 */
inline StreamingResult streaming_dmd(const std::vector<Tensor3>& batches, Index rho_max, double gamma,
                                     const Transform& t, std::uint64_t seed, bool keep_intermediates = false) {
    detail::require(!batches.empty(), ErrorCode::insufficient_data, "no batches given");
    const Tensor3& first = batches.front();
    StreamingResult out;
    out.sketch = init_sketch(first.rows(), first.cols(), first.tubes(), rho_max, t, seed);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        update_sketch(out.sketch, batches[b]);
        out.states_seen.push_back(out.sketch.states_seen);
        const bool last = b + 1 == batches.size();
        if (!keep_intermediates && !last)
            continue;
        TSvdM f = reconstruct_lowrank(out.sketch, gamma);
        const Index seen = std::max<Index>(out.sketch.states_seen, 2);
        // Rows of V past the last seen state belong to snapshots that have not arrived.
        DmdModel model =
            detail::lowrank_dmd_hat(f.U_hat, f.S_hat, detail::leading_rows(f.V_hat, seen), f.multirank, t);
        if (keep_intermediates)
            out.intermediates.push_back(model);
        if (last)
            out.model = std::move(model);
    }
    return out;
}

} // namespace tdmd
