#pragma once

#include "mmsechan/grid_predictors.hpp"
#include "mmsechan/linalg.hpp"
#include "mmsechan/training.hpp"

#include <span>
#include <vector>

namespace mmsechan {

/// Half-wavelength ULA steering vector, a_m = exp(j pi m sin(theta)).
CVector ula_steering(std::size_t M, double theta);

/// Per-sample spectra of single-path ULA covariances whose spatial frequencies are the K
/// DFT bins, and their elementwise Wiener weights c / (c + sigma^2).
struct SpectralGrid {
    TransformMode mode = TransformMode::Circulant;
    std::size_t M = 0;
    std::vector<RVector> spectra;
    std::vector<RVector> filters;

    std::size_t K() const noexcept { return spectra.size(); }
};

SpectralGrid build_spectral_grid(std::size_t M, TransformMode mode, double noise_var);

/// (u * v)[n] = sum_k u[k] v[(n - k) mod K].
RVector circular_conv(const RVector& u, const RVector& v);

/// (g star v)[k] = sum_n g[n] v[(n - k) mod K]; the adjoint of u -> u * v.
RVector circular_corr(const RVector& g, const RVector& v);

/// w~[n] = w[(-n) mod K].
RVector reverse_mod(const RVector& w);

/// Shift-invariant estimator parameters: w_hat(c) = w0 * softmax(w~0 * c + bias).
struct NoLearnParams {
    RVector w0;
    RVector bias;
};

NoLearnParams nolearn_params(const SpectralGrid& grid, const TransformQ& Q);

RVector nolearn_weights(const NoLearnParams& p, const RVector& c);

/// Q y computed with an FFT (zero-padded to K for the Toeplitz transform).
CVector transform_fft(const TransformQ& Q, const CVector& y);

/// Q^H diag(w) Q y through dense matrix products.
CVector apply_spectral_filter(const TransformQ& Q, const RVector& w, const CVector& y);

/// Same as apply_spectral_filter in O(K log K).
CVector apply_spectral_filter_fft(const TransformQ& Q, const RVector& w, const CVector& y);

CVector estimate_nolearn(const NoLearnParams& p, const TransformQ& Q, const CVector& y, double noise_var);

/// Trainable counterpart: w_cnn(c) = a1 * softmax(a2 * c + b1) + b2.
struct CNNParams {
    RVector a1;
    RVector a2;
    RVector b1;
    RVector b2;

    std::size_t K() const noexcept { return static_cast<std::size_t>(a1.size()); }
    bool all_finite() const { return a1.allFinite() && a2.allFinite() && b1.allFinite() && b2.allFinite(); }

    static CNNParams from_nolearn(const NoLearnParams& p);
};

RVector cnn_weights(const CNNParams& p, const RVector& c);

CVector cnn_estimate(const CNNParams& p, const TransformQ& Q, const CVector& y, double noise_var);

struct EstimationSample {
    CVector y;
    CVector h;
};

/// Mean of ||h - W_cnn(c) y||^2 over the batch.
double cnn_loss(const CNNParams& p, const TransformQ& Q, double noise_var, std::span<const EstimationSample> batch);

CNNParams cnn_backward(const CNNParams& p, const TransformQ& Q, double noise_var,
                       std::span<const EstimationSample> batch);

RVector pack(const CNNParams& p);
CNNParams unpack_cnn(const RVector& flat, std::size_t K);

struct CNNTrainResult {
    CNNParams params;
    TrainTrace trace;
};

CNNTrainResult cnn_train(const CNNParams& p0, const TransformQ& Q, double noise_var,
                         std::span<const EstimationSample> data, const TrainConfig& cfg);

/// One SNR point of the warm-start schedule.
struct SnrStage {
    double noise_var = 1.0;
    std::vector<EstimationSample> data;
    /// The no-learn parameters at this SNR; used for the first stage and as a fallback start.
    CNNParams fallback;
};

/// One warm-start stage: starts from `previous` when given and its training loss beats the
/// stage fallback, then trains with shuffle seed cfg.seed + stage_index.
CNNTrainResult cnn_train_stage(const TransformQ& Q, const SnrStage& stage, const CNNParams* previous,
                               const TrainConfig& cfg, std::size_t stage_index);

/// Trains stages in the given order (highest SNR first). Each stage starts from the previous
/// stage's trained model unless its own fallback has a lower training loss; stage s uses the
/// shuffle seed cfg.seed + s.
std::vector<CNNTrainResult> cnn_train_hierarchical(const TransformQ& Q, std::span<const SnrStage> stages,
                                                   const TrainConfig& cfg);

}  // namespace mmsechan
