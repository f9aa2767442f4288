#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdmd/decomp.hpp"

namespace tdmd {

enum class DmdMethod { dmd, starm_dmd, starm_dmd2 };

inline std::string_view to_string(DmdMethod method) {
    switch (method) {
    case DmdMethod::dmd: return "dmd";
    case DmdMethod::starm_dmd: return "starm_dmd";
    case DmdMethod::starm_dmd2: return "starm_dmd2";
    }
    return "?";
}

inline DmdMethod parse_dmd_method(std::string_view name) {
    if (name == "dmd") return DmdMethod::dmd;
    if (name == "starm_dmd") return DmdMethod::starm_dmd;
    if (name == "starm_dmd2") return DmdMethod::starm_dmd2;
    throw Error(ErrorCode::invalid_parameter, "unknown method '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Storage accounting
// ---------------------------------------------------------------------------

using Storage = std::int64_t;

/// Stored floating point numbers for a model with per-slice ranks.
/// DMD and ⋆_M-DMD use ranks[0] as the uniform rank k.
inline Storage storage_count(DmdMethod method, Index m, Index n, std::span<const Index> ranks, Storage st_m) {
    detail::require(!ranks.empty(), ErrorCode::invalid_parameter, "storage_count needs at least one rank");
    const Storage mm = m, nn = n;
    switch (method) {
    case DmdMethod::dmd: {
        const Storage k = ranks[0];
        return mm * nn * k + k * (k + 1) / 2;
    }
    case DmdMethod::starm_dmd: {
        const Storage k = ranks[0];
        return mm * nn * k + nn * k * (k + 1) / 2 + nn * k + st_m;
    }
    case DmdMethod::starm_dmd2: {
        Storage total = st_m;
        for (Index kj : ranks) {
            const Storage k = kj;
            total += mm * k + k * (k + 1) / 2 + k;
        }
        return total;
    }
    }
    return 0;
}

inline Storage storage_count(DmdMethod method, Index m, Index n, Index k, Storage st_m) {
    const Index ranks[] = {k};
    return storage_count(method, m, n, std::span<const Index>(ranks), st_m);
}

struct EqualizedRank {
    Index rank = 1;
    bool over_budget = false; ///< even rank 1 exceeds the target
};

/// Largest k >= 1 whose storage fits the target (uniform-rank methods only).
inline EqualizedRank equalized_rank(Storage target, DmdMethod method, Index m, Index n, Storage st_m,
                                    Index max_rank = std::numeric_limits<Index>::max()) {
    detail::require(method != DmdMethod::starm_dmd2, ErrorCode::invalid_parameter,
                    "equalized_rank applies to dmd and starm_dmd");
    EqualizedRank out;
    if (storage_count(method, m, n, Index{1}, st_m) > target) {
        out.over_budget = true;
        return out;
    }
    Index k = 1;
    while (k < max_rank && storage_count(method, m, n, k + 1, st_m) <= target)
        ++k;
    out.rank = k;
    return out;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

struct SnapshotPair {
    Tensor3 X;
    Tensor3 Y;
};

/// X drops the last lateral slice of the trajectory, Y drops the first.
inline SnapshotPair make_snapshot_pair(const Tensor3& c) {
    detail::require(c.cols() >= 2, ErrorCode::insufficient_data, "a trajectory needs at least two snapshots");
    return {c.lateral_range(0, c.cols() - 1), c.lateral_range(1, c.cols() - 1)};
}

/**
 * DMD model X_t ≈ Z ⋆ T^t ⋆ G.
 *
 * The matrix variant is stored with n = 1 and M = [1]: modes hold Φ as an
 * N x k x 1 tensor. The *_hat members are the transform-domain factors; for
 * slices with k_j < k their trailing blocks are exactly zero.
 */
struct DmdModel {
    DmdMethod method = DmdMethod::starm_dmd;
    Tensor3 modes;
    Tensor3 eigen;
    Tensor3 amplitudes;
    Tensor3 modes_hat;
    Tensor3 eigen_hat;
    Tensor3 amplitudes_hat;
    Transform transform = make_identity(1);
    std::vector<Index> multirank;
    Storage storage_flns = 0;

    Index rank() const { return modes.cols(); }

    /// Diagonal of each transform-domain slice of T, restricted to the leading k_j entries.
    std::vector<std::vector<cplx>> eigenvalues() const {
        std::vector<std::vector<cplx>> out(static_cast<std::size_t>(eigen_hat.tubes()));
        for (Index j = 0; j < eigen_hat.tubes(); ++j) {
            const Index kj = multirank.empty() ? eigen_hat.rows() : multirank[static_cast<std::size_t>(j)];
            for (Index i = 0; i < kj; ++i)
                out[static_cast<std::size_t>(j)].push_back(eigen_hat(i, i, j));
        }
        return out;
    }

    std::vector<cplx> all_eigenvalues() const {
        std::vector<cplx> flat;
        for (const auto& s : eigenvalues())
            flat.insert(flat.end(), s.begin(), s.end());
        return flat;
    }
};

namespace detail {

/// Schur step, modes and amplitudes shared by every variant. basis_hat is m x k,
/// k_hat is k x k, x0_hat is m x 1 (all transform domain).
inline DmdModel finish_model(DmdMethod method, const Tensor3& basis_hat, const Tensor3& k_hat,
                             const std::vector<Index>& multirank, const Tensor3& x0_hat, const Transform& t) {
    DmdModel model;
    model.method = method;
    model.transform = t;
    model.multirank = multirank;
    auto [w_hat, t_hat] = facewise::schur(k_hat, &multirank);
    model.modes_hat = facewise::product(basis_hat, w_hat);
    model.eigen_hat = std::move(t_hat);
    model.amplitudes_hat = facewise::product(model.modes_hat, x0_hat, facewise::Op::adjoint);
    model.modes = to_standard_domain(t, model.modes_hat);
    model.eigen = to_standard_domain(t, model.eigen_hat);
    model.amplitudes = to_standard_domain(t, model.amplitudes_hat);
    return model;
}

/// S^† for an f-diagonal S_hat with the pinv cutoff applied per slice.
inline Tensor3 diagonal_pinv(const Tensor3& s_hat) {
    Tensor3 out(s_hat.cols(), s_hat.rows(), s_hat.tubes(), Domain::transform);
    const Index q = std::min(s_hat.rows(), s_hat.cols());
    const double tol = facewise::default_pinv_tolerance(s_hat.rows(), s_hat.cols());
    for (Index j = 0; j < s_hat.tubes(); ++j) {
        double smax = 0.0;
        for (Index i = 0; i < q; ++i)
            smax = std::max(smax, std::abs(s_hat(i, i, j)));
        for (Index i = 0; i < q; ++i) {
            const cplx s = s_hat(i, i, j);
            if (std::abs(s) > tol * smax)
                out(i, i, j) = 1.0 / s;
        }
    }
    return out;
}

} // namespace detail

/**
 * Exact DMD with the eigendecomposition replaced by a complex Schur form.
 *
 * X = U Σ V^* truncated to rank k, K = U_k^* Y V_k Σ_k^{-1} = W T W^*,
 * Φ = U_k W and α = Φ^* x_0 with x_0 the first column of X.
 */
inline DmdModel exact_dmd(const Matrix& x, const Matrix& y, Index k) {
    detail::require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorCode::invalid_dimension,
                    "X and Y must share a shape");
    const Index q = std::min(x.rows(), x.cols());
    detail::require(k >= 1 && k <= q, ErrorCode::invalid_rank,
                    "rank " + std::to_string(k) + " outside [1, " + std::to_string(q) + "]");
    SliceSvd f = thin_svd(x);
    const double cutoff = facewise::default_pinv_tolerance(x.rows(), x.cols()) * f.s(0);
    for (Index i = 0; i < k; ++i)
        detail::require(f.s(i) > cutoff && f.s(i) > 0.0, ErrorCode::rank_deficiency,
                        "singular value " + std::to_string(i + 1) + " of X is below tolerance");

    const Index n_state = x.rows();
    Tensor3 basis(n_state, k, 1, Domain::transform);
    basis.slice(0) = f.U.leftCols(k);
    Tensor3 k_hat(k, k, 1, Domain::transform);
    k_hat.slice(0) = f.U.leftCols(k).adjoint() * y * f.V.leftCols(k) *
                     f.s.head(k).cwiseInverse().cast<cplx>().asDiagonal();
    Tensor3 x0(n_state, 1, 1, Domain::transform);
    x0.slice(0) = x.col(0);

    DmdModel model = detail::finish_model(DmdMethod::dmd, basis, k_hat, {k}, x0, make_identity(1));
    model.storage_flns = storage_count(DmdMethod::dmd, n_state, 1, k, 0);
    return model;
}

/// Truncation choice for ⋆_M-DMD: uniform rank (tr-tSVDM) or energy (tr-tSVDMII).
struct Truncation {
    enum class Kind { rank, energy } kind = Kind::rank;
    Index rank = 1;
    double gamma = 1.0;

    static Truncation with_rank(Index k) { return {Kind::rank, k, 1.0}; }
    static Truncation with_energy(double g) { return {Kind::energy, 0, g}; }
};

/**
 * ⋆_M-DMD (rank truncation) and ⋆_M-DMDII (energy truncation).
 *
 * Runs entirely in the transform domain: truncated facewise SVD of X,
 * K = U^* ⋆ Y ⋆ V ⋆ S^†, ⋆_M-Schur of K, modes Z = U ⋆ W and amplitudes
 * G = Z^* ⋆ X_0 with X_0 the first lateral slice of X.
 */
inline DmdModel star_m_dmd(const Tensor3& x, const Tensor3& y, const Transform& t, Truncation trunc) {
    detail::require(x.same_shape(y), ErrorCode::invalid_dimension, "X and Y must share a shape");
    detail::require(x.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    detail::require(!x.is_zero(), ErrorCode::degenerate_input, "X is the zero tensor");

    TSvdM svd = trunc.kind == Truncation::Kind::rank ? tr_tsvdm(x, t, trunc.rank) : tr_tsvdm2(x, t, trunc.gamma);
    const Tensor3 y_hat = to_transform_domain(t, y);
    const Tensor3 uy = facewise::product(svd.U_hat, y_hat, facewise::Op::adjoint);
    const Tensor3 k_hat = facewise::product(facewise::product(uy, svd.V_hat), detail::diagonal_pinv(svd.S_hat));
    const Tensor3 x0_hat = to_transform_domain(t, x.lateral(0));

    const DmdMethod method = trunc.kind == Truncation::Kind::rank ? DmdMethod::starm_dmd : DmdMethod::starm_dmd2;
    DmdModel model = detail::finish_model(method, svd.U_hat, k_hat, svd.multirank, x0_hat, t);
    model.storage_flns = method == DmdMethod::starm_dmd
                             ? storage_count(method, x.rows(), x.tubes(), svd.rank(), t.storage_cost())
                             : storage_count(method, x.rows(), x.tubes(), svd.multirank, t.storage_cost());
    return model;
}

/**
 * States 0..t_max as lateral slices: slice t is Z ⋆ T^t ⋆ G.
 *
 * Facewise, v_0 = Ĝ and v_t = T̂ v_{t-1}, so each step costs one triangular
 * product per slice; slice t of the output is Ẑ v_t.
 */
inline Tensor3 reconstruct(const DmdModel& model, Index t_max) {
    detail::require(t_max >= 0, ErrorCode::invalid_parameter, "t_max must be nonnegative");
    const Index m = model.modes_hat.rows(), n = model.modes_hat.tubes();
    Tensor3 out_hat(m, t_max + 1, n, Domain::transform);
    for_each_slice(n, [&](Index j) {
        const auto z = model.modes_hat.slice(j);
        const auto tri = model.eigen_hat.slice(j);
        Vector v = model.amplitudes_hat.slice(j).col(0);
        auto dst = out_hat.slice(j);
        for (Index step = 0; step <= t_max; ++step) {
            dst.col(step).noalias() = z * v;
            if (step < t_max)
                v = tri.template triangularView<Eigen::Upper>() * v;
        }
    });
    return to_standard_domain(model.transform, out_hat);
}

struct RelativeError {
    double global = 0.0;
    std::vector<double> statewise;
};

/// ‖A − B‖/‖A‖ overall and per lateral slice. A zero truth slice gives 0 when
/// the estimate is also zero there, +inf otherwise.
inline RelativeError relative_error(const Tensor3& truth, const Tensor3& estimate) {
    detail::require(truth.same_shape(estimate), ErrorCode::invalid_dimension,
                    "relative_error: " + truth.shape_string() + " vs " + estimate.shape_string());
    RelativeError out;
    out.statewise.resize(static_cast<std::size_t>(truth.cols()));
    double num_total = 0.0, den_total = 0.0;
    for (Index j = 0; j < truth.cols(); ++j) {
        double num = 0.0, den = 0.0;
        for (Index k = 0; k < truth.tubes(); ++k) {
            num += (truth.slice(k).col(j) - estimate.slice(k).col(j)).squaredNorm();
            den += truth.slice(k).col(j).squaredNorm();
        }
        num_total += num;
        den_total += den;
        double re = 0.0;
        if (den > 0.0)
            re = std::sqrt(num / den);
        else if (num > 0.0)
            re = std::numeric_limits<double>::infinity();
        out.statewise[static_cast<std::size_t>(j)] = re;
    }
    if (den_total > 0.0)
        out.global = std::sqrt(num_total / den_total);
    else if (num_total > 0.0)
        out.global = std::numeric_limits<double>::infinity();
    return out;
}

/**
 * Closest element of the structured subspace {(M^*⊗I) bdiag(Â) (M⊗I)} to Y X^†
 * in Frobenius norm, for unfold(X), unfold(Y).
 *
 * Forms the dense pseudoinverse of unfold(X̂), so it is limited to m*n <= cap.
 */
inline Matrix alt_opt_minimizer(const Tensor3& x, const Tensor3& y, const Transform& t, Index cap = 512) {
    detail::require(x.same_shape(y), ErrorCode::invalid_dimension, "X and Y must share a shape");
    detail::require(x.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    const Index m = x.rows(), p = x.cols(), n = x.tubes();
    detail::require(m * n <= cap, ErrorCode::size_limit,
                    "m*n = " + std::to_string(m * n) + " exceeds the cap of " + std::to_string(cap));
    const Matrix xp = facewise::pinv(unfold(to_transform_domain(t, x)),
                                     facewise::default_pinv_tolerance(m * n, p)); // p x mn
    Tensor3 z_hat(p, m, n, Domain::transform);
    for (Index i = 0; i < n; ++i)
        z_hat.slice(i) = xp.middleCols(i * m, m);
    const Tensor3 g_hat = facewise::product(to_transform_domain(t, y), z_hat);
    return to_structured_matrix(to_standard_domain(t, g_hat), t);
}

} // namespace tdmd
