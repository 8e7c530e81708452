#pragma once

#include "mmsechan/channel_model.hpp"
#include "mmsechan/linalg.hpp"

#include <vector>

namespace mmsechan {

/// Hermitian Toeplitz (M+l)x(M+l) covariance of the observation window extended by l
/// future coefficients, ordered newest first: [h[M-1+l], ..., h[M], h[M-1], ..., h[0]].
struct ExtendedCovariance {
    CMatrix matrix;
    std::size_t M = 0;
    std::size_t l = 0;

    /// S^T Sigma S: the observation covariance embedded in the bottom-right corner.
    CMatrix observation_block() const;
    /// e1^T Sigma S: the cross-correlation row [R[l], ..., R[M-1+l]].
    CRowVector correlation_row() const;
};

/// Reformulated l-step predictor W = Sigma S (S^T Sigma S + sigma^2 I)^{-1}.
struct PredictorFilter {
    CRowVector row;  // e1^T W, applied to the reversed observation vector
    CMatrix full;    // (M+l) x M
    std::size_t M = 0;
    std::size_t l = 0;

    /// S^T W, the M x M block that acts as the LMMSE estimator of the observation window.
    CMatrix observation_filter() const { return full.bottomRows(static_cast<Eigen::Index>(M)); }
    cd apply(const CVector& y) const;
};

/// W = Sigma (Sigma + sigma^2 I)^{-1}, via a Hermitian solve.
CMatrix lmmse_estimator_filter(const CMatrix& sigma, double noise_var);

/// l-step prediction c^H Sigma_y^{-1} y computed directly from the covariance function.
cd lmmse_predict_direct(const CovarianceFunction& cov, std::size_t M, std::size_t l, double noise_var,
                        const CVector& y);

ExtendedCovariance extended_covariance(const CovarianceFunction& cov, std::size_t M, std::size_t l);

PredictorFilter predictor_filter(const ExtendedCovariance& ext, double noise_var);

/// Convenience: predictor_filter(extended_covariance(cov, M, l), noise_var).
PredictorFilter predictor_filter(const CovarianceFunction& cov, std::size_t M, std::size_t l, double noise_var);

/// Batch NMSE: mean over rows of ||h_b - hhat_b||^2 divided by the row dimension.
double nmse(const ChannelMatrix& truth, const ChannelMatrix& estimate);

/// Scalar-target NMSE (dimension one): mean |h_b - hhat_b|^2.
double nmse(const std::vector<cd>& truth, const std::vector<cd>& estimate);

}  // namespace mmsechan
