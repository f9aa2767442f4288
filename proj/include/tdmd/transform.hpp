#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/SVD>

#include "tdmd/tensor.hpp"

namespace tdmd {

enum class TransformKind { dct, dst, data_driven, explicit_matrix };

inline std::string_view to_string(TransformKind kind) {
    switch (kind) {
    case TransformKind::dct: return "dct";
    case TransformKind::dst: return "dst";
    case TransformKind::data_driven: return "data";
    case TransformKind::explicit_matrix: return "explicit";
    }
    return "?";
}

inline TransformKind parse_transform_kind(std::string_view name) {
    if (name == "dct") return TransformKind::dct;
    if (name == "dst") return TransformKind::dst;
    if (name == "data" || name == "data_driven") return TransformKind::data_driven;
    if (name == "explicit") return TransformKind::explicit_matrix;
    throw Error(ErrorCode::invalid_parameter, "unknown transform kind '" + std::string(name) + "'");
}

enum class Direction { forward, inverse };

/**
 * Unitary n x n matrix M defining the ⋆_M product along mode 3.
 *
 * The dense matrix is always materialized; it is the reference path for every
 * transform kind. storage_cost() is 0 for the fast-transform kinds (DCT, DST)
 * and nnz(M) otherwise.
 */
class Transform {
public:
    Transform(TransformKind kind, Matrix m) : kind_(kind), matrix_(std::move(m)) {
        detail::require(matrix_.rows() > 0 && matrix_.rows() == matrix_.cols(), ErrorCode::invalid_transform,
                        "transform matrix must be square and nonempty");
        if (kind_ == TransformKind::dct || kind_ == TransformKind::dst) {
            storage_ = 0;
        } else {
            storage_ = 0;
            for (Index c = 0; c < matrix_.cols(); ++c)
                for (Index r = 0; r < matrix_.rows(); ++r)
                    if (matrix_(r, c) != cplx(0.0, 0.0))
                        ++storage_;
        }
    }

    TransformKind kind() const noexcept { return kind_; }
    Index size() const noexcept { return matrix_.rows(); }
    const Matrix& matrix() const noexcept { return matrix_; }
    long long storage_cost() const noexcept { return storage_; }

    /// max |(M M^*)_{ij} - I_{ij}|
    double unitarity_defect() const {
        Matrix g = matrix_ * matrix_.adjoint();
        g -= Matrix::Identity(size(), size());
        return g.cwiseAbs().maxCoeff();
    }

private:
    TransformKind kind_;
    Matrix matrix_;
    long long storage_ = 0;
};

/// Orthonormal DCT-II: M[j,k] = c_j cos(pi (2k+1) j / (2n)).
inline Transform make_dct(Index n) {
    detail::require(n >= 1, ErrorCode::invalid_dimension, "DCT size must be at least 1");
    Matrix m(n, n);
    const double dn = static_cast<double>(n);
    for (Index j = 0; j < n; ++j) {
        const double c = j == 0 ? std::sqrt(1.0 / dn) : std::sqrt(2.0 / dn);
        for (Index k = 0; k < n; ++k)
            m(j, k) = c * std::cos(std::numbers::pi * static_cast<double>((2 * k + 1) * j) / (2.0 * dn));
    }
    return Transform(TransformKind::dct, std::move(m));
}

/// Orthonormal DST-I: M[j,k] = sqrt(2/(n+1)) sin(pi (j+1)(k+1) / (n+1)). Symmetric.
inline Transform make_dst(Index n) {
    detail::require(n >= 1, ErrorCode::invalid_dimension, "DST size must be at least 1");
    Matrix m(n, n);
    const double dn1 = static_cast<double>(n + 1);
    const double c = std::sqrt(2.0 / dn1);
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k)
            m(j, k) = c * std::sin(std::numbers::pi * static_cast<double>((j + 1) * (k + 1)) / dn1);
    return Transform(TransformKind::dst, std::move(m));
}

/// Wraps a caller-supplied unitary matrix. Rejects matrices that are not unitary to 1e-10.
inline Transform make_explicit(Matrix m) {
    Transform t(TransformKind::explicit_matrix, std::move(m));
    detail::require(t.unitarity_defect() <= 1e-10, ErrorCode::invalid_transform, "explicit transform is not unitary");
    return t;
}

inline Transform make_identity(Index n) {
    detail::require(n >= 1, ErrorCode::invalid_dimension, "identity size must be at least 1");
    return Transform(TransformKind::explicit_matrix, Matrix::Identity(n, n));
}

/// X_(3): the n x (p*m) mode-3 unfolding. Column j*m + i holds the tube X(i,j,:).
inline Matrix mode3_unfolding(const Tensor3& x) { return x.fibers().transpose(); }

/**
 * Data-driven transform: with X_(3) = U Σ V^*, returns M = U^*.
 *
 * Row j of X_(3) x_3 M equals σ_j v_j^*, so frontal-slice energies of the
 * transformed tensor come out in non-increasing order.
 */
inline Transform make_data_driven(const Tensor3& x) {
    detail::require(x.size() > 0 && !x.is_zero(), ErrorCode::degenerate_input,
                    "data-driven transform needs a nonzero tensor");
    Eigen::BDCSVD<Matrix> svd(mode3_unfolding(x), Eigen::ComputeFullU);
    return Transform(TransformKind::data_driven, svd.matrixU().adjoint());
}

inline Transform make_transform(TransformKind kind, Index n, const Tensor3* data = nullptr) {
    switch (kind) {
    case TransformKind::dct: return make_dct(n);
    case TransformKind::dst: return make_dst(n);
    case TransformKind::data_driven:
        detail::require(data != nullptr, ErrorCode::invalid_parameter, "data-driven transform needs data");
        return make_data_driven(*data);
    case TransformKind::explicit_matrix: return make_identity(n);
    }
    throw Error(ErrorCode::invalid_parameter, "unknown transform kind");
}

/// forward: X x_3 M; inverse: X x_3 M^*.
inline Tensor3 apply(const Transform& t, const Tensor3& x, Direction direction) {
    detail::require(x.tubes() == t.size(), ErrorCode::invalid_dimension,
                    "tensor has " + std::to_string(x.tubes()) + " tubes but transform size is " +
                        std::to_string(t.size()));
    Tensor3 out(x.rows(), x.cols(), x.tubes(),
                direction == Direction::forward ? Domain::transform : Domain::standard);
    if (direction == Direction::forward)
        out.fibers().noalias() = x.fibers() * t.matrix().transpose();
    else
        out.fibers().noalias() = x.fibers() * t.matrix().conjugate();
    return out;
}

inline Tensor3 to_transform_domain(const Transform& t, const Tensor3& x) { return apply(t, x, Direction::forward); }
inline Tensor3 to_standard_domain(const Transform& t, const Tensor3& x) { return apply(t, x, Direction::inverse); }

} // namespace tdmd
