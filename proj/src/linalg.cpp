#include "mmsechan/linalg.hpp"

#include <cmath>
#include <limits>

namespace mmsechan {

namespace {

CMatrix solve_left(const CMatrix& A, const CMatrix& B, bool allow_pinv) {
    if (A.rows() != A.cols() || A.rows() != B.rows())
        throw std::invalid_argument("solve: dimension mismatch");
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() == Eigen::Success) {
        CMatrix X = llt.solve(B);
        if (X.allFinite()) return X;
    }
    if (!allow_pinv) throw SingularMatrixError("solve: system matrix is not positive definite");
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(A);
    return cod.solve(B);
}

}  // namespace

CMatrix right_solve_hermitian(const CMatrix& A, const CMatrix& B, bool allow_pinv) {
    // X A = B  <=>  A X^H = B^H for Hermitian A
    return solve_left(A, B.adjoint(), allow_pinv).adjoint();
}

CVector solve_hermitian(const CMatrix& A, const CVector& b, bool allow_pinv) {
    return solve_left(A, b, allow_pinv);
}

double log_abs_det(const CMatrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("log_abs_det: matrix is not square");
    if (A.rows() == 0) return 0.0;
    Eigen::PartialPivLU<CMatrix> lu(A);
    const CMatrix& U = lu.matrixLU();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        const double m = std::abs(U(i, i));
        if (m == 0.0 || !std::isfinite(m)) throw DegenerateFilterError("log_abs_det: determinant is zero");
        acc += std::log(m);
    }
    return acc;
}

RVector softmax(const RVector& x) {
    if (x.size() == 0) throw std::invalid_argument("softmax: empty input");
    const double shift = x.maxCoeff();
    RVector e = (x.array() - shift).exp();
    return e / e.sum();
}

}  // namespace mmsechan
