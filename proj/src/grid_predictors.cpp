#include "mmsechan/grid_predictors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmsechan {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require_noise(double noise_var, const char* who) {
    if (!(noise_var > 0.0)) throw std::invalid_argument(std::string(who) + ": noise variance must be > 0");
}

}  // namespace

std::string to_string(TransformMode mode) { return mode == TransformMode::Circulant ? "circulant" : "toeplitz"; }

TransformMode transform_mode_from_string(const std::string& name) {
    if (name == "circulant" || name == "circ") return TransformMode::Circulant;
    if (name == "toeplitz" || name == "toep") return TransformMode::Toeplitz;
    throw std::invalid_argument("unknown transform mode '" + name + "'");
}

std::string to_string(BiasSource source) { return source == BiasSource::Approximated ? "approximated" : "exact"; }

BiasSource bias_source_from_string(const std::string& name) {
    if (name == "approximated") return BiasSource::Approximated;
    if (name == "exact") return BiasSource::Exact;
    throw std::invalid_argument("unknown bias source '" + name + "'");
}

TransformQ make_q(TransformMode mode, std::size_t M) {
    if (M == 0) throw std::invalid_argument("make_q: M must be >= 1");
    const std::size_t K = mode == TransformMode::Circulant ? M : 2 * M;
    TransformQ t;
    t.mode = mode;
    t.Q.resize(idx(K), idx(M));
    const double scale = 1.0 / std::sqrt(static_cast<double>(K));
    for (std::size_t r = 0; r < K; ++r)
        for (std::size_t c = 0; c < M; ++c) {
            // reduce r*c modulo K before scaling so the phase stays exact for large K
            const double phase = -2.0 * std::numbers::pi * static_cast<double>((r * c) % K) / static_cast<double>(K);
            t.Q(idx(r), idx(c)) = std::polar(scale, phase);
        }
    return t;
}

RVector chat(const CVector& y, const TransformQ& Q, double noise_var) {
    require_noise(noise_var, "chat");
    if (y.size() != Q.Q.cols()) throw std::invalid_argument("chat: observation length mismatch");
    return (Q.Q * y).cwiseAbs2() / noise_var;
}

CMatrix reconstruct_filter(const RVector& w, const TransformQ& Q) {
    if (w.size() != Q.Q.rows()) throw std::invalid_argument("reconstruct_filter: weight length mismatch");
    return Q.Q.adjoint() * w.cast<cd>().asDiagonal() * Q.Q;
}

RVector decompose_filter(const CMatrix& A, const TransformQ& Q, std::size_t sample) {
    if (A.rows() != Q.Q.cols() || A.cols() != Q.Q.cols())
        throw std::invalid_argument("decompose_filter: filter size does not match transform");
    const CMatrix projected = Q.Q * A * Q.Q.adjoint();
    const RVector d = projected.diagonal().real();
    if (Q.mode == TransformMode::Circulant) {
        if (!d.allFinite()) throw DecompositionError("decompose_filter: non-finite filter", sample);
        return d;
    }
    // G_kl = |(Q Q^H)_kl|^2. For the Toeplitz transform G has a one-dimensional null space
    // (the alternating vector), so the minimum-norm solution of G w = d is taken.
    const RMatrix G = (Q.Q * Q.Q.adjoint()).cwiseAbs2();
    Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(G);
    const RVector w = cod.solve(d);
    const double residual = (G * w - d).norm();
    if (!w.allFinite() || residual > 1e-8 * std::max(1.0, d.norm()))
        throw DecompositionError("decompose_filter: normal equations are inconsistent", sample);
    return w;
}

RVector decompose_filter(const PredictorFilter& W, const TransformQ& Q, std::size_t sample) {
    return decompose_filter(W.observation_filter(), Q, sample);
}

double bias_term(const PredictorFilter& W) {
    const auto m = idx(W.M);
    const CMatrix I_minus = CMatrix::Identity(m, m) - W.observation_filter();
    return log_abs_det(I_minus);
}

FilterBank make_filter_bank(const std::vector<CovarianceFunction>& covs, std::size_t M, std::size_t l,
                            double noise_var) {
    if (covs.empty()) throw std::invalid_argument("make_filter_bank: no grid samples");
    FilterBank bank;
    bank.M = M;
    bank.l = l;
    bank.filters.reserve(covs.size());
    bank.biases.reserve(covs.size());
    for (const auto& cov : covs) {
        bank.filters.push_back(predictor_filter(cov, M, l, noise_var));
        bank.biases.push_back(bias_term(bank.filters.back()));
    }
    return bank;
}

std::pair<PriorGrid, FilterBank> build_prior_grid(std::size_t n_grid, const DopplerSpec& spec, std::size_t M,
                                                  std::size_t l, double noise_var) {
    if (n_grid == 0) throw std::invalid_argument("build_prior_grid: N_grid must be >= 1");
    PriorGrid grid;
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double doa = n_grid == 1 ? std::numbers::pi / 2.0
                                       : std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_grid - 1);
        PathSet single;
        single.paths.push_back(make_path(doa, 0.0, 1.0, spec));
        grid.doas.push_back(doa);
        grid.dopplers_hz.push_back(single.paths[0].doppler_hz);
        grid.covariances.push_back(covariance_from_paths(single, M + l, spec));
    }
    FilterBank bank = make_filter_bank(grid.covariances, M, l, noise_var);
    return {std::move(grid), std::move(bank)};
}

RVector gridded_weights(const FilterBank& bank, const CVector& y, double noise_var) {
    if (bank.size() == 0) throw std::invalid_argument("gridded_predict: empty filter bank");
    require_noise(noise_var, "gridded_predict");
    if (y.size() != idx(bank.M)) throw std::invalid_argument("gridded_predict: observation length mismatch");
    RVector logits(idx(bank.size()));
    for (std::size_t i = 0; i < bank.size(); ++i) {
        // tr(S^T W C) with C = y y^H / sigma^2 is the quadratic form y^H (S^T W) y / sigma^2
        const cd quad = y.dot(bank.filters[i].observation_filter() * y);
        logits(idx(i)) = quad.real() / noise_var + bank.biases[i];
    }
    return softmax(logits);
}

cd gridded_predict(const FilterBank& bank, const CVector& y, double noise_var) {
    const RVector gate = gridded_weights(bank, y, noise_var);
    cd out{0.0, 0.0};
    for (std::size_t i = 0; i < bank.size(); ++i) out += gate(idx(i)) * bank.filters[i].apply(y);
    return out;
}

double StructuredParams::bias_divergence() const {
    if (b.size() != b_exact.size() || b.size() == 0) return 0.0;
    return (b - b_exact).cwiseAbs().maxCoeff();
}

StructuredParams structured_params(const FilterBank& bank, const TransformQ& Q, BiasSource source) {
    if (bank.size() == 0) throw std::invalid_argument("structured_params: empty filter bank");
    if (Q.M() != bank.M) throw std::invalid_argument("structured_params: transform size does not match bank");
    const auto n = idx(bank.size());
    const auto m = idx(bank.M);
    StructuredParams p;
    p.bias_source = source;
    p.A1.resize(n, idx(Q.K()));
    p.A2.resize(m, n);
    p.b.resize(n);
    p.b_exact.resize(n);
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const RVector w = decompose_filter(bank.filters[i], Q, i);
        p.A1.row(idx(i)) = w.transpose();
        p.A2.col(idx(i)) = bank.filters[i].row.transpose();
        p.b_exact(idx(i)) = bank.biases[i];
        if (source == BiasSource::Exact) {
            p.b(idx(i)) = bank.biases[i];
        } else {
            const CMatrix approx = reconstruct_filter(w, Q);
            try {
                p.b(idx(i)) = log_abs_det(CMatrix::Identity(m, m) - approx);
            } catch (const DegenerateFilterError&) {
                throw DecompositionError("structured_params: approximated filter has I - S^T W singular", i);
            }
        }
    }
    return p;
}

CVector structured_filter(const StructuredParams& params, const RVector& c) {
    if (c.size() != params.A1.cols()) throw std::invalid_argument("structured_predict: input length mismatch");
    const RVector gate = softmax(params.A1 * c + params.b);
    return params.A2 * gate.cast<cd>();
}

cd structured_predict(const StructuredParams& params, const RVector& c, const CVector& y) {
    if (y.size() != params.A2.rows()) throw std::invalid_argument("structured_predict: observation length mismatch");
    const CVector w = structured_filter(params, c);
    return (w.transpose() * y)(0);
}

}  // namespace mmsechan
