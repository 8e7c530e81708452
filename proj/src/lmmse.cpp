#include "mmsechan/lmmse.hpp"

#include <stdexcept>

namespace mmsechan {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

CMatrix ExtendedCovariance::observation_block() const { return matrix.bottomRightCorner(idx(M), idx(M)); }

CRowVector ExtendedCovariance::correlation_row() const { return matrix.row(0).tail(idx(M)); }

cd PredictorFilter::apply(const CVector& y) const {
    if (y.size() != row.size()) throw std::invalid_argument("PredictorFilter::apply: observation length mismatch");
    return (row * y)(0);
}

CMatrix lmmse_estimator_filter(const CMatrix& sigma, double noise_var) {
    if (sigma.rows() != sigma.cols()) throw std::invalid_argument("lmmse_estimator_filter: matrix is not square");
    if (!(noise_var >= 0.0)) throw std::invalid_argument("lmmse_estimator_filter: noise variance must be >= 0");
    CMatrix A = sigma;
    A.diagonal().array() += noise_var;
    return right_solve_hermitian(A, sigma, false);
}

cd lmmse_predict_direct(const CovarianceFunction& cov, std::size_t M, std::size_t l, double noise_var,
                        const CVector& y) {
    if (M == 0 || l == 0) throw std::invalid_argument("lmmse_predict_direct: M and l must be >= 1");
    if (cov.size() < M + l) throw std::invalid_argument("lmmse_predict_direct: need M+l covariance samples");
    if (y.size() != idx(M)) throw std::invalid_argument("lmmse_predict_direct: observation length mismatch");
    if (!(noise_var >= 0.0)) throw std::invalid_argument("lmmse_predict_direct: noise variance must be >= 0");
    CMatrix sigma_y = build_covariance_matrix(cov, M);
    sigma_y.diagonal().array() += noise_var;
    const CVector x = solve_hermitian(sigma_y, y, noise_var == 0.0);
    cd acc{0.0, 0.0};
    for (std::size_t i = 0; i < M; ++i) acc += cov[l + i] * x(idx(i));
    return acc;
}

ExtendedCovariance extended_covariance(const CovarianceFunction& cov, std::size_t M, std::size_t l) {
    if (M == 0 || l == 0) throw std::invalid_argument("extended_covariance: M and l must be >= 1");
    return ExtendedCovariance{build_covariance_matrix(cov, M + l), M, l};
}

PredictorFilter predictor_filter(const ExtendedCovariance& ext, double noise_var) {
    if (!(noise_var >= 0.0)) throw std::invalid_argument("predictor_filter: noise variance must be >= 0");
    const CMatrix rhs = ext.matrix.rightCols(idx(ext.M));  // Sigma S
    CMatrix A = ext.observation_block();
    A.diagonal().array() += noise_var;
    PredictorFilter f;
    f.M = ext.M;
    f.l = ext.l;
    f.full = right_solve_hermitian(A, rhs, noise_var == 0.0);
    f.row = f.full.row(0);
    return f;
}

PredictorFilter predictor_filter(const CovarianceFunction& cov, std::size_t M, std::size_t l, double noise_var) {
    return predictor_filter(extended_covariance(cov, M, l), noise_var);
}

double nmse(const ChannelMatrix& truth, const ChannelMatrix& estimate) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
        throw std::invalid_argument("nmse: batch shape mismatch");
    if (truth.size() == 0) throw std::invalid_argument("nmse: empty batch");
    return (truth - estimate).squaredNorm() / static_cast<double>(truth.size());
}

double nmse(const std::vector<cd>& truth, const std::vector<cd>& estimate) {
    if (truth.size() != estimate.size()) throw std::invalid_argument("nmse: batch size mismatch");
    if (truth.empty()) throw std::invalid_argument("nmse: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) acc += std::norm(truth[i] - estimate[i]);
    return acc / static_cast<double>(truth.size());
}

}  // namespace mmsechan
