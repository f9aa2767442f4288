#pragma once

#include <algorithm>
#include <limits>
#include <optional>

#include <Eigen/SVD>

#include "tdmd/parallel.hpp"
#include "tdmd/transform.hpp"

namespace tdmd {

// Transform-domain building blocks. Inputs here are hat tensors; every
// operation is independent per frontal slice.
namespace facewise {

enum class Op { none, adjoint };

inline Tensor3 product(const Tensor3& a, const Tensor3& b, Op op_a = Op::none, Op op_b = Op::none) {
    const Index a_rows = op_a == Op::none ? a.rows() : a.cols();
    const Index a_cols = op_a == Op::none ? a.cols() : a.rows();
    const Index b_rows = op_b == Op::none ? b.rows() : b.cols();
    const Index b_cols = op_b == Op::none ? b.cols() : b.rows();
    detail::require(a_cols == b_rows && a.tubes() == b.tubes(), ErrorCode::invalid_dimension,
                    "facewise product: cannot multiply " + a.shape_string() + " by " + b.shape_string());
    Tensor3 c(a_rows, b_cols, a.tubes(), Domain::transform);
    for_each_slice(a.tubes(), [&](Index k) {
        auto out = c.slice(k);
        if (op_a == Op::none && op_b == Op::none)
            out.noalias() = a.slice(k) * b.slice(k);
        else if (op_a == Op::adjoint && op_b == Op::none)
            out.noalias() = a.slice(k).adjoint() * b.slice(k);
        else if (op_a == Op::none && op_b == Op::adjoint)
            out.noalias() = a.slice(k) * b.slice(k).adjoint();
        else
            out.noalias() = a.slice(k).adjoint() * b.slice(k).adjoint();
    });
    return c;
}

inline Tensor3 adjoint(const Tensor3& a) {
    Tensor3 out(a.cols(), a.rows(), a.tubes(), Domain::transform);
    for (Index k = 0; k < a.tubes(); ++k)
        out.slice(k) = a.slice(k).adjoint();
    return out;
}

/// Default pseudoinverse cutoff relative to a slice's largest singular value.
inline double default_pinv_tolerance(Index rows, Index cols) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

/// Moore-Penrose inverse; singular values <= rel_tol * sigma_max count as zero.
inline Matrix pinv(const Eigen::Ref<const Matrix>& a, double rel_tol) {
    Matrix out = Matrix::Zero(a.cols(), a.rows());
    if (a.size() == 0)
        return out;
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return out;
    const double cutoff = rel_tol * s(0);
    Index r = 0;
    while (r < s.size() && s(r) > cutoff)
        ++r;
    const RealVector inv = s.head(r).cwiseInverse();
    out.noalias() = svd.matrixV().leftCols(r) * inv.cast<cplx>().asDiagonal() * svd.matrixU().leftCols(r).adjoint();
    return out;
}

inline Tensor3 pinv(const Tensor3& a, std::optional<double> rel_tol = std::nullopt) {
    const double tol = rel_tol.value_or(default_pinv_tolerance(a.rows(), a.cols()));
    Tensor3 out(a.cols(), a.rows(), a.tubes(), Domain::transform);
    for_each_slice(a.tubes(), [&](Index k) { out.slice(k) = pinv(a.slice(k), tol); });
    return out;
}

inline Tensor3 identity(Index p, Index n) {
    Tensor3 out(p, p, n, Domain::transform);
    for (Index k = 0; k < n; ++k)
        out.slice(k).setIdentity();
    return out;
}

} // namespace facewise

/// C = A ⋆_M B.
inline Tensor3 star_m(const Tensor3& a, const Tensor3& b, const Transform& t) {
    detail::require(a.tubes() == t.size() && b.tubes() == t.size(), ErrorCode::invalid_transform,
                    "transform size does not match tube dimension");
    detail::require(a.cols() == b.rows(), ErrorCode::invalid_dimension,
                    "star_m: inner dimensions differ (" + a.shape_string() + " vs " + b.shape_string() + ")");
    return to_standard_domain(t, facewise::product(to_transform_domain(t, a), to_transform_domain(t, b)));
}

/// p x p x n tensor whose transform-domain slices are all I_p.
inline Tensor3 identity_tensor(Index p, const Transform& t) {
    detail::require(p >= 1, ErrorCode::invalid_dimension, "identity size must be at least 1");
    return to_standard_domain(t, facewise::identity(p, t.size()));
}

inline Tensor3 conj_transpose(const Tensor3& a, const Transform& t) {
    return to_standard_domain(t, facewise::adjoint(to_transform_domain(t, a)));
}

/// Facewise Moore-Penrose inverse. Default rel_tol is max(m,p)*eps per slice.
inline Tensor3 pinv(const Tensor3& a, const Transform& t, std::optional<double> rel_tol = std::nullopt) {
    return to_standard_domain(t, facewise::pinv(to_transform_domain(t, a), rel_tol));
}

/// bdiag of the frontal slices: (m n) x (p n).
inline Matrix block_diagonal(const Tensor3& a) {
    const Index m = a.rows(), p = a.cols(), n = a.tubes();
    Matrix out = Matrix::Zero(m * n, p * n);
    for (Index k = 0; k < n; ++k)
        out.block(k * m, k * p, m, p) = a.slice(k);
    return out;
}

/// M ⊗ I_q for the transform matrix M.
inline Matrix kron_identity(const Matrix& m, Index q) {
    Matrix out = Matrix::Zero(m.rows() * q, m.cols() * q);
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            out.block(r * q, c * q, q, q).diagonal().setConstant(m(r, c));
    return out;
}

/// (M^* ⊗ I_m) bdiag(Â) (M ⊗ I_p), the matrix that acts on unfold(B) like A ⋆_M B.
inline Matrix to_structured_matrix(const Tensor3& a, const Transform& t) {
    detail::require(a.tubes() == t.size(), ErrorCode::invalid_transform, "transform size does not match tube dimension");
    const Matrix& m = t.matrix();
    return kron_identity(m.adjoint(), a.rows()) * block_diagonal(to_transform_domain(t, a)) *
           kron_identity(m, a.cols());
}

} // namespace tdmd
