#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mmsechan {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Realizations stacked as rows (count x dim), matching the channel file layout.
using ChannelMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFilterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecompositionError : public std::runtime_error {
public:
    DecompositionError(const std::string& what, std::size_t sample)
        : std::runtime_error(what + " (grid sample " + std::to_string(sample) + ")"), sample_(sample) {}

    std::size_t sample() const noexcept { return sample_; }

private:
    std::size_t sample_;
};

/// Solves X * A = B for X with A Hermitian, i.e. returns B * A^{-1}.
///
/// A is factored with LLT. When the factorization fails and `allow_pinv` is set the
/// minimum-norm pseudo-inverse solution is returned instead; otherwise SingularMatrixError.
CMatrix right_solve_hermitian(const CMatrix& A, const CMatrix& B, bool allow_pinv);

/// Solves A x = b with A Hermitian, same fallback rules as right_solve_hermitian.
CVector solve_hermitian(const CMatrix& A, const CVector& b, bool allow_pinv);

/// log|det(A)| through partial-pivot LU. Throws DegenerateFilterError for a zero determinant.
double log_abs_det(const CMatrix& A);

/// Numerically stable softmax (max subtracted before exponentiation).
RVector softmax(const RVector& x);

}  // namespace mmsechan
