#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdmd/error.hpp"

namespace tdmd {

using Index = Eigen::Index;
using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Which representation a tensor's entries currently hold. Advisory only.
enum class Domain { standard, transform };

/**
 * Dense third-order complex tensor of shape m x p x n.
 *
 * Entry (i, j, k) lives at i + m*(j + p*k): each frontal slice X(:,:,k) is a
 * contiguous column-major m x p block, and the m*p mode-3 fibers form the rows
 * of an (m*p) x n matrix view.
 */
class Tensor3 {
public:
    using SliceMap = Eigen::Map<Matrix>;
    using ConstSliceMap = Eigen::Map<const Matrix>;

    Tensor3() = default;

    Tensor3(Index m, Index p, Index n, Domain domain = Domain::standard)
        : m_(m), p_(p), n_(n), domain_(domain) {
        detail::require(m >= 0 && p >= 0 && n >= 0, ErrorCode::invalid_dimension,
                        "tensor extents must be nonnegative");
        data_.assign(static_cast<std::size_t>(m * p * n), cplx(0.0, 0.0));
    }

    static Tensor3 from_slices(const std::vector<Matrix>& slices, Domain domain = Domain::standard) {
        detail::require(!slices.empty(), ErrorCode::invalid_dimension, "no frontal slices given");
        Tensor3 out(slices.front().rows(), slices.front().cols(), static_cast<Index>(slices.size()), domain);
        for (Index k = 0; k < out.n_; ++k) {
            const Matrix& s = slices[static_cast<std::size_t>(k)];
            detail::require(s.rows() == out.m_ && s.cols() == out.p_, ErrorCode::invalid_dimension,
                            "frontal slices must share one shape");
            out.slice(k) = s;
        }
        return out;
    }

    static Tensor3 from_real(const RealMatrix& fibers, Index m, Index p) {
        detail::require(fibers.rows() == m * p, ErrorCode::invalid_dimension, "fiber matrix has wrong row count");
        Tensor3 out(m, p, fibers.cols());
        out.fibers() = fibers.cast<cplx>();
        return out;
    }

    Index rows() const noexcept { return m_; }
    Index cols() const noexcept { return p_; }
    Index tubes() const noexcept { return n_; }
    Index size() const noexcept { return m_ * p_ * n_; }

    Domain domain() const noexcept { return domain_; }
    void set_domain(Domain d) noexcept { domain_ = d; }

    cplx& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
    const cplx& operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

    cplx* data() noexcept { return data_.data(); }
    const cplx* data() const noexcept { return data_.data(); }

    SliceMap slice(Index k) { return SliceMap(data_.data() + k * m_ * p_, m_, p_); }
    ConstSliceMap slice(Index k) const { return ConstSliceMap(data_.data() + k * m_ * p_, m_, p_); }

    /// (m*p) x n view whose rows are the tube fibers X(i,j,:).
    SliceMap fibers() { return SliceMap(data_.data(), m_ * p_, n_); }
    ConstSliceMap fibers() const { return ConstSliceMap(data_.data(), m_ * p_, n_); }

    /// The m x n matrix X(:, j, :) (rows i, columns k).
    Matrix lateral_matrix(Index j) const {
        Matrix out(m_, n_);
        for (Index k = 0; k < n_; ++k)
            out.col(k) = slice(k).col(j);
        return out;
    }

    /// Lateral slices [first, first + count) as an m x count x n tensor.
    Tensor3 lateral_range(Index first, Index count) const {
        detail::require(first >= 0 && count >= 0 && first + count <= p_, ErrorCode::invalid_dimension,
                        "lateral range out of bounds");
        Tensor3 out(m_, count, n_, domain_);
        for (Index k = 0; k < n_; ++k)
            out.slice(k) = slice(k).middleCols(first, count);
        return out;
    }

    Tensor3 lateral(Index j) const { return lateral_range(j, 1); }

    void set_lateral_range(Index first, const Tensor3& src) {
        detail::require(src.m_ == m_ && src.n_ == n_ && first >= 0 && first + src.p_ <= p_,
                        ErrorCode::invalid_dimension, "lateral block does not fit");
        for (Index k = 0; k < n_; ++k)
            slice(k).middleCols(first, src.p_) = src.slice(k);
    }

    double norm() const {
        double acc = 0.0;
        for (const cplx& v : data_)
            acc += std::norm(v);
        return std::sqrt(acc);
    }

    double squared_norm() const {
        double acc = 0.0;
        for (const cplx& v : data_)
            acc += std::norm(v);
        return acc;
    }

    bool same_shape(const Tensor3& o) const noexcept { return m_ == o.m_ && p_ == o.p_ && n_ == o.n_; }

    bool is_zero() const {
        for (const cplx& v : data_)
            if (v != cplx(0.0, 0.0))
                return false;
        return true;
    }

    bool is_real() const {
        for (const cplx& v : data_)
            if (v.imag() != 0.0)
                return false;
        return true;
    }

    Tensor3& operator+=(const Tensor3& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += o.data_[i];
        return *this;
    }

    Tensor3& operator-=(const Tensor3& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] -= o.data_[i];
        return *this;
    }

    Tensor3& operator*=(cplx s) {
        for (cplx& v : data_)
            v *= s;
        return *this;
    }

    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(cplx s, Tensor3 a) { return a *= s; }

    bool operator==(const Tensor3& o) const { return same_shape(o) && data_ == o.data_; }

private:
    std::size_t offset(Index i, Index j, Index k) const {
        return static_cast<std::size_t>(i + m_ * (j + p_ * k));
    }

    void check_same(const Tensor3& o) const {
        detail::require(same_shape(o), ErrorCode::invalid_dimension,
                        "shape mismatch: " + shape_string() + " vs " + o.shape_string());
    }

public:
    std::string shape_string() const {
        return std::to_string(m_) + "x" + std::to_string(p_) + "x" + std::to_string(n_);
    }

private:
    Index m_ = 0;
    Index p_ = 0;
    Index n_ = 0;
    Domain domain_ = Domain::standard;
    std::vector<cplx> data_;
};

/// unfold(X) = X_(2)^T: column j stacks the m x n matrix X(:,j,:) column by column.
inline Matrix unfold(const Tensor3& x) {
    const Index m = x.rows(), p = x.cols(), n = x.tubes();
    Matrix out(m * n, p);
    for (Index k = 0; k < n; ++k)
        out.middleRows(k * m, m) = x.slice(k);
    return out;
}

/// Inverse of unfold for an (m*n) x p matrix.
inline Tensor3 fold(const Matrix& mat, Index m, Index n) {
    detail::require(m > 0 && n > 0 && mat.rows() == m * n, ErrorCode::invalid_dimension,
                    "fold: row count must equal m*n");
    Tensor3 out(m, mat.cols(), n);
    for (Index k = 0; k < n; ++k)
        out.slice(k) = mat.middleRows(k * m, m);
    return out;
}

/// Reshapes a state vector of length m*n into an m x 1 x n lateral slice.
inline Tensor3 lateral_from_state(const Vector& x, Index m, Index n) {
    detail::require(x.size() == m * n, ErrorCode::invalid_dimension, "state length must equal m*n");
    return fold(Matrix(x), m, n);
}

} // namespace tdmd
