#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "tdmd/algebra.hpp"

namespace tdmd {

// ---------------------------------------------------------------------------
// Per-slice matrix kernels
// ---------------------------------------------------------------------------

struct SliceSvd {
    Matrix U;
    RealVector s;
    Matrix V;
};

/// Rotates each singular pair so the largest-magnitude entry of u is real positive.
inline void normalize_phase(Eigen::Ref<Matrix> u, Eigen::Ref<Matrix> v) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index at = 0;
        double best = -1.0;
        for (Index r = 0; r < u.rows(); ++r) {
            const double a = std::abs(u(r, c));
            if (a > best) {
                best = a;
                at = r;
            }
        }
        if (best <= 0.0)
            continue;
        const cplx phase = std::conj(u(at, c)) / best;
        u.col(c) *= phase;
        v.col(c) *= phase;
    }
}

inline SliceSvd thin_svd(const Eigen::Ref<const Matrix>& a) {
    const Index q = std::min(a.rows(), a.cols());
    SliceSvd out{Matrix::Zero(a.rows(), q), RealVector::Zero(q), Matrix::Zero(a.cols(), q)};
    if (q == 0)
        return out;
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = svd.matrixU();
    out.s = svd.singularValues();
    out.V = svd.matrixV();
    normalize_phase(out.U, out.V);
    return out;
}

struct SliceQr {
    Matrix Q;
    Matrix R;
};

/// Economy QR with R's diagonal made real nonnegative.
inline SliceQr thin_qr(const Eigen::Ref<const Matrix>& a) {
    const Index m = a.rows(), p = a.cols(), q = std::min(m, p);
    Eigen::HouseholderQR<Matrix> qr(a);
    SliceQr out;
    out.Q = qr.householderQ() * Matrix::Identity(m, q);
    out.R = qr.matrixQR().topRows(q).template triangularView<Eigen::Upper>();
    for (Index i = 0; i < q; ++i) {
        const double mag = std::abs(out.R(i, i));
        if (mag == 0.0)
            continue;
        const cplx phase = out.R(i, i) / mag;
        out.R.row(i) *= std::conj(phase);
        out.Q.col(i) *= phase;
    }
    return out;
}

namespace detail {

inline bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Canonical eigenvalue order: modulus descending, then real part, then imaginary part.
inline bool precedes(cplx a, cplx b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (!nearly_equal(ma, mb))
        return ma > mb;
    if (!nearly_equal(a.real(), b.real()))
        return a.real() > b.real();
    if (!nearly_equal(a.imag(), b.imag()))
        return a.imag() > b.imag();
    return false;
}

/// Swaps the adjacent diagonal entries k, k+1 of upper-triangular t by a unitary rotation.
inline void swap_schur_pair(Matrix& t, Matrix& w, Index k) {
    const cplx t11 = t(k, k), t22 = t(k + 1, k + 1), t12 = t(k, k + 1);
    const cplx x = t12, y = t22 - t11;
    const double len = std::hypot(std::abs(x), std::abs(y));
    if (len == 0.0)
        return;
    // First column of the rotation is the eigenvector of the 2x2 block for t22.
    Eigen::Matrix2cd g;
    g << x / len, -std::conj(y) / len, y / len, std::conj(x) / len;
    t.middleCols(k, 2) = t.middleCols(k, 2) * g;
    t.middleRows(k, 2) = g.adjoint() * t.middleRows(k, 2);
    w.middleCols(k, 2) = w.middleCols(k, 2) * g;
    t(k + 1, k) = cplx(0.0, 0.0);
    t(k, k) = t22;
    t(k + 1, k + 1) = t11;
}

} // namespace detail

/// Complex Schur form k = w t w^* with the diagonal of t in canonical order.
inline std::pair<Matrix, Matrix> schur(const Eigen::Ref<const Matrix>& k) {
    const Index n = k.rows();
    if (n == 0)
        return {Matrix(0, 0), Matrix(0, 0)};
    Eigen::ComplexSchur<Matrix> cs(Matrix(k), true);
    Matrix t = cs.matrixT();
    Matrix w = cs.matrixU();
    t.template triangularView<Eigen::StrictlyLower>().setZero();
    for (Index pass = 0; pass < n; ++pass) {
        bool swapped = false;
        for (Index i = 0; i + 1 < n; ++i) {
            if (detail::precedes(t(i + 1, i + 1), t(i, i))) {
                detail::swap_schur_pair(t, w, i);
                swapped = true;
            }
        }
        if (!swapped)
            break;
    }
    return {std::move(w), std::move(t)};
}

// ---------------------------------------------------------------------------
// Tensor factorizations
// ---------------------------------------------------------------------------

struct TQr {
    Tensor3 Q; ///< m x q x n with ⋆_M-orthogonal slices
    Tensor3 R; ///< q x p x n, upper-triangular transform-domain slices
};

namespace facewise {

inline TQr qr(const Tensor3& a_hat) {
    const Index q = std::min(a_hat.rows(), a_hat.cols());
    TQr out{Tensor3(a_hat.rows(), q, a_hat.tubes(), Domain::transform),
            Tensor3(q, a_hat.cols(), a_hat.tubes(), Domain::transform)};
    for_each_slice(a_hat.tubes(), [&](Index k) {
        SliceQr f = thin_qr(a_hat.slice(k));
        out.Q.slice(k) = f.Q;
        out.R.slice(k) = f.R;
    });
    return out;
}

inline std::vector<SliceSvd> svd(const Tensor3& a_hat) {
    std::vector<SliceSvd> out(static_cast<std::size_t>(a_hat.tubes()));
    for_each_slice(a_hat.tubes(), [&](Index k) { out[static_cast<std::size_t>(k)] = thin_svd(a_hat.slice(k)); });
    return out;
}

} // namespace facewise

inline TQr tqr(const Tensor3& a, const Transform& t) {
    TQr hat = facewise::qr(to_transform_domain(t, a));
    return {to_standard_domain(t, hat.Q), to_standard_domain(t, hat.R)};
}

/**
 * Truncated ⋆_M-SVD A ≈ U ⋆ S ⋆ V^*.
 *
 * Slice j keeps k_j = multirank[j] singular triplets; columns k_j..k-1 of
 * U_hat, V_hat and the matching diagonal of S_hat are exactly zero, where
 * k = max_j k_j. The *_hat members are the transform-domain factors the
 * standard-domain ones were produced from.
 */
struct TSvdM {
    Tensor3 U;
    Tensor3 S;
    Tensor3 V;
    Tensor3 U_hat;
    Tensor3 S_hat;
    Tensor3 V_hat;
    std::vector<Index> multirank;
    std::optional<double> gamma;
    std::vector<std::vector<double>> sigma_hat; ///< retained σ̂ per slice

    Index rank() const {
        return multirank.empty() ? 0 : *std::max_element(multirank.begin(), multirank.end());
    }
    Index total_rank() const { return std::accumulate(multirank.begin(), multirank.end(), Index{0}); }
};

namespace detail {

inline TSvdM assemble_svd(const std::vector<SliceSvd>& svds, const std::vector<Index>& keep, Index m, Index p,
                          const Transform& t) {
    const Index n = static_cast<Index>(svds.size());
    const Index k = keep.empty() ? 0 : *std::max_element(keep.begin(), keep.end());
    TSvdM out;
    out.U_hat = Tensor3(m, k, n, Domain::transform);
    out.S_hat = Tensor3(k, k, n, Domain::transform);
    out.V_hat = Tensor3(p, k, n, Domain::transform);
    out.multirank = keep;
    out.sigma_hat.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        const SliceSvd& f = svds[static_cast<std::size_t>(j)];
        const Index kj = keep[static_cast<std::size_t>(j)];
        out.U_hat.slice(j).leftCols(kj) = f.U.leftCols(kj);
        out.V_hat.slice(j).leftCols(kj) = f.V.leftCols(kj);
        for (Index i = 0; i < kj; ++i) {
            out.S_hat(i, i, j) = f.s(i);
            out.sigma_hat[static_cast<std::size_t>(j)].push_back(f.s(i));
        }
    }
    out.U = to_standard_domain(t, out.U_hat);
    out.S = to_standard_domain(t, out.S_hat);
    out.V = to_standard_domain(t, out.V_hat);
    return out;
}

} // namespace detail

/// All transform-domain singular values, slice by slice, in non-increasing order.
inline std::vector<RealVector> singular_values_hat(const Tensor3& a, const Transform& t) {
    std::vector<SliceSvd> svds = facewise::svd(to_transform_domain(t, a));
    std::vector<RealVector> out;
    out.reserve(svds.size());
    for (auto& f : svds)
        out.push_back(std::move(f.s));
    return out;
}

/// Thin, untruncated ⋆_M-SVD with q = min(m, p) tubes.
inline TSvdM tsvdm(const Tensor3& a, const Transform& t) {
    detail::require(a.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    const Index q = std::min(a.rows(), a.cols());
    return detail::assemble_svd(facewise::svd(to_transform_domain(t, a)),
                                std::vector<Index>(static_cast<std::size_t>(a.tubes()), q), a.rows(), a.cols(), t);
}

/// tr-tSVDM: every slice truncated to the same rank k.
inline TSvdM tr_tsvdm(const Tensor3& a, const Transform& t, Index k) {
    detail::require(a.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    const Index q = std::min(a.rows(), a.cols());
    detail::require(k >= 1 && k <= q, ErrorCode::invalid_rank,
                    "rank " + std::to_string(k) + " outside [1, " + std::to_string(q) + "]");
    return detail::assemble_svd(facewise::svd(to_transform_domain(t, a)),
                                std::vector<Index>(static_cast<std::size_t>(a.tubes()), k), a.rows(), a.cols(), t);
}

/**
 * Multirank selected by global energy ordering.
 *
 * All σ̂² are sorted descending (ties: lower slice, then lower index) and the
 * shortest prefix whose energy reaches gamma * total is kept. At least one
 * value is always kept.
 */
inline std::vector<Index> energy_multirank(const std::vector<RealVector>& sigma, double gamma) {
    struct Entry {
        double energy;
        Index slice;
        Index index;
    };
    std::vector<Entry> all;
    for (Index j = 0; j < static_cast<Index>(sigma.size()); ++j)
        for (Index i = 0; i < sigma[static_cast<std::size_t>(j)].size(); ++i) {
            const double s = sigma[static_cast<std::size_t>(j)](i);
            all.push_back({s * s, j, i});
        }
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        if (a.energy != b.energy)
            return a.energy > b.energy;
        if (a.slice != b.slice)
            return a.slice < b.slice;
        return a.index < b.index;
    });
    double total = 0.0;
    for (const Entry& e : all)
        total += e.energy;
    const double threshold = gamma * total;

    std::vector<Index> keep(sigma.size(), 0);
    double acc = 0.0;
    for (const Entry& e : all) {
        keep[static_cast<std::size_t>(e.slice)] += 1;
        acc += e.energy;
        if (acc >= threshold)
            break;
    }
    return keep;
}

/// tr-tSVDMII: per-slice ranks from global energy ordering with parameter gamma in (0, 1].
inline TSvdM tr_tsvdm2(const Tensor3& a, const Transform& t, double gamma) {
    detail::require(a.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    detail::require(gamma > 0.0 && gamma <= 1.0, ErrorCode::invalid_parameter, "gamma must lie in (0, 1]");
    detail::require(!a.is_zero(), ErrorCode::degenerate_input, "tr_tsvdm2 of a zero tensor");
    std::vector<SliceSvd> svds = facewise::svd(to_transform_domain(t, a));
    std::vector<RealVector> sigma;
    for (const auto& f : svds)
        sigma.push_back(f.s);
    TSvdM out = detail::assemble_svd(svds, energy_multirank(sigma, gamma), a.rows(), a.cols(), t);
    out.gamma = gamma;
    return out;
}

/// U ⋆ S ⋆ V^*.
inline Tensor3 reconstruct(const TSvdM& f, const Transform& t) {
    Tensor3 us = facewise::product(f.U_hat, f.S_hat);
    return to_standard_domain(t, facewise::product(us, f.V_hat, facewise::Op::none, facewise::Op::adjoint));
}

struct TSchur {
    Tensor3 W;     ///< ⋆_M-unitary
    Tensor3 T;     ///< upper-triangular transform-domain slices
    Tensor3 W_hat;
    Tensor3 T_hat;
};

namespace facewise {

/// Schur form of each slice; with a multirank only the leading k_j x k_j block is factored.
inline std::pair<Tensor3, Tensor3> schur(const Tensor3& k_hat, const std::vector<Index>* multirank = nullptr) {
    const Index k = k_hat.rows();
    Tensor3 w(k, k, k_hat.tubes(), Domain::transform);
    Tensor3 tt(k, k, k_hat.tubes(), Domain::transform);
    for_each_slice(k_hat.tubes(), [&](Index j) {
        const Index kj = multirank ? std::min((*multirank)[static_cast<std::size_t>(j)], k) : k;
        auto ks = k_hat.slice(j);
        auto [wl, tl] = tdmd::schur(ks.topLeftCorner(kj, kj));
        auto ws = w.slice(j);
        auto ts = tt.slice(j);
        ws.setIdentity();
        ws.topLeftCorner(kj, kj) = wl;
        ts.topLeftCorner(kj, kj) = tl;
        if (kj < k) {
            // Exact similarity on the untouched blocks (zero when K came from a padded SVD).
            ts.topRightCorner(kj, k - kj) = wl.adjoint() * ks.topRightCorner(kj, k - kj);
            ts.bottomLeftCorner(k - kj, kj) = ks.bottomLeftCorner(k - kj, kj) * wl;
            ts.bottomRightCorner(k - kj, k - kj) = ks.bottomRightCorner(k - kj, k - kj);
        }
    });
    return {std::move(w), std::move(tt)};
}

} // namespace facewise

inline TSchur tschur(const Tensor3& k, const Transform& t, const std::vector<Index>* multirank = nullptr) {
    detail::require(k.rows() == k.cols(), ErrorCode::invalid_dimension, "tschur needs square frontal slices");
    detail::require(k.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    auto [w_hat, t_hat] = facewise::schur(to_transform_domain(t, k), multirank);
    TSchur out;
    out.W = to_standard_domain(t, w_hat);
    out.T = to_standard_domain(t, t_hat);
    out.W_hat = std::move(w_hat);
    out.T_hat = std::move(t_hat);
    return out;
}

/// ⋆_M-SVD of B ⋆ C from its factors, without forming the product.
inline TSvdM factored_to_svd(const Tensor3& b, const Tensor3& c, const Transform& t) {
    detail::require(b.cols() == c.rows() && b.tubes() == c.tubes(), ErrorCode::invalid_dimension,
                    "factored_to_svd: " + b.shape_string() + " and " + c.shape_string() + " do not conform");
    detail::require(b.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    const Tensor3 b_hat = to_transform_domain(t, b);
    const Tensor3 ct_hat = facewise::adjoint(to_transform_domain(t, c));
    TQr qb = facewise::qr(b_hat);
    TQr qc = facewise::qr(ct_hat);
    const Tensor3 small = facewise::product(qb.R, qc.R, facewise::Op::none, facewise::Op::adjoint);
    std::vector<SliceSvd> svds = facewise::svd(small);
    for_each_slice(b.tubes(), [&](Index j) {
        SliceSvd& f = svds[static_cast<std::size_t>(j)];
        f.U = qb.Q.slice(j) * f.U;
        f.V = qc.Q.slice(j) * f.V;
        normalize_phase(f.U, f.V);
    });
    const Index r = std::min(small.rows(), small.cols());
    return detail::assemble_svd(svds, std::vector<Index>(static_cast<std::size_t>(b.tubes()), r), b.rows(), c.cols(), t);
}

} // namespace tdmd
