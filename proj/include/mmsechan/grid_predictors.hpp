#pragma once

#include "mmsechan/channel_model.hpp"
#include "mmsechan/linalg.hpp"
#include "mmsechan/lmmse.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mmsechan {

enum class TransformMode { Circulant, Toeplitz };

std::string to_string(TransformMode mode);
TransformMode transform_mode_from_string(const std::string& name);

/// Common diagonalizing transform: K x M unitary-scaled DFT. Circulant uses the full M-point
/// DFT (K = M); Toeplitz keeps the first M columns of the 2M-point DFT (K = 2M).
struct TransformQ {
    TransformMode mode = TransformMode::Circulant;
    CMatrix Q;

    std::size_t K() const noexcept { return static_cast<std::size_t>(Q.rows()); }
    std::size_t M() const noexcept { return static_cast<std::size_t>(Q.cols()); }
};

TransformQ make_q(TransformMode mode, std::size_t M);

/// sigma^-2 |Q y|^2, elementwise.
RVector chat(const CVector& y, const TransformQ& Q, double noise_var);

/// Q^H diag(w) Q.
CMatrix reconstruct_filter(const RVector& w, const TransformQ& Q);

/// Frobenius-optimal real w with Q^H diag(w) Q ~ A (A is M x M). `sample` only tags errors.
RVector decompose_filter(const CMatrix& A, const TransformQ& Q, std::size_t sample = 0);

/// Decomposes S^T W of a predictor filter.
RVector decompose_filter(const PredictorFilter& W, const TransformQ& Q, std::size_t sample = 0);

/// Discrete uniform prior over single-path DoAs.
struct PriorGrid {
    std::vector<double> doas;                      // delta_i in [0, pi]
    std::vector<double> dopplers_hz;               // cos(delta_i) B_D
    std::vector<CovarianceFunction> covariances;   // single-path, length M+l
};

/// Per-sample predictor filters with their log-determinant biases.
struct FilterBank {
    std::vector<PredictorFilter> filters;
    std::vector<double> biases;
    std::size_t M = 0;
    std::size_t l = 0;

    std::size_t size() const noexcept { return filters.size(); }
};

/// log|det(I_M - S^T W)|.
double bias_term(const PredictorFilter& W);

/// Builds one predictor filter and bias per covariance function.
FilterBank make_filter_bank(const std::vector<CovarianceFunction>& covs, std::size_t M, std::size_t l,
                            double noise_var);

/// DoAs delta_i = i pi / (N-1) (pi/2 when N = 1), each a single unit-power path.
std::pair<PriorGrid, FilterBank> build_prior_grid(std::size_t n_grid, const DopplerSpec& spec, std::size_t M,
                                                  std::size_t l, double noise_var);

/// Softmax gate of the Gridded Predictor for observation y.
RVector gridded_weights(const FilterBank& bank, const CVector& y, double noise_var);

cd gridded_predict(const FilterBank& bank, const CVector& y, double noise_var);

enum class BiasSource { Approximated, Exact };

std::string to_string(BiasSource source);
BiasSource bias_source_from_string(const std::string& name);

/// Two-layer form of the predictor: gate = softmax(A1 c + b), filter = A2 gate.
struct StructuredParams {
    RMatrix A1;            // N_grid x K
    CMatrix A2;            // M x N_grid
    RVector b;             // N_grid
    RVector b_exact;       // biases of the exact filters, kept for diagnostics
    BiasSource bias_source = BiasSource::Approximated;

    std::size_t n_grid() const noexcept { return static_cast<std::size_t>(A1.rows()); }
    std::size_t K() const noexcept { return static_cast<std::size_t>(A1.cols()); }
    std::size_t M() const noexcept { return static_cast<std::size_t>(A2.rows()); }
    /// max_i |b_i(approximated) - b_i(exact)|.
    double bias_divergence() const;
};

StructuredParams structured_params(const FilterBank& bank, const TransformQ& Q,
                                   BiasSource source = BiasSource::Approximated);

/// Length-M complex filter A2 softmax(A1 c + b).
CVector structured_filter(const StructuredParams& params, const RVector& c);

cd structured_predict(const StructuredParams& params, const RVector& c, const CVector& y);

}  // namespace mmsechan
