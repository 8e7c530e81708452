#pragma once

#include "mmsechan/grid_predictors.hpp"
#include "mmsechan/linalg.hpp"
#include "mmsechan/training.hpp"

#include <span>
#include <vector>

namespace mmsechan {

/// Real-valued two-layer network with softmax hidden activation:
/// out = A2 softmax(A1 c + b1) + b2, where out stacks the real part of the length-M
/// prediction filter over its imaginary part.
struct NNParams {
    RMatrix A1;  // N_grid x K
    RVector b1;  // N_grid
    RMatrix A2;  // 2M x N_grid
    RVector b2;  // 2M

    std::size_t n_grid() const noexcept { return static_cast<std::size_t>(A1.rows()); }
    std::size_t K() const noexcept { return static_cast<std::size_t>(A1.cols()); }
    std::size_t M() const noexcept { return static_cast<std::size_t>(A2.rows() / 2); }
    bool all_finite() const { return A1.allFinite() && b1.allFinite() && A2.allFinite() && b2.allFinite(); }

    static NNParams zeros(std::size_t M, std::size_t K, std::size_t n_grid);
};

/// Gradient blocks, shaped like NNParams.
using GradientSet = NNParams;

/// One training/evaluation example: network input c, noisy observation y, and the true
/// coefficient to predict.
struct PredictionSample {
    RVector c;
    CVector y;
    cd target;
};

NNParams init_from_structured(const StructuredParams& params);

RVector forward(const NNParams& p, const RVector& c);

/// Recombines the forward output as a complex filter and applies it to y.
cd predict(const NNParams& p, const RVector& c, const CVector& y);

/// Mean of |h - hhat|^2 over the batch.
double loss(const NNParams& p, std::span<const PredictionSample> batch);

GradientSet backward(const NNParams& p, std::span<const PredictionSample> batch);

RVector pack(const NNParams& p);
NNParams unpack(const RVector& flat, std::size_t M, std::size_t K, std::size_t n_grid);

struct NNTrainResult {
    NNParams params;
    TrainTrace trace;
};

NNTrainResult train(const NNParams& p0, std::span<const PredictionSample> data, const TrainConfig& cfg);

}  // namespace mmsechan
