#include "mmsechan/cnn_estimator.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmsechan {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

constexpr double kWeightClip = 1.0 - 1e-12;

void require_noise(double noise_var, const char* who) {
    if (!(noise_var > 0.0)) throw std::invalid_argument(std::string(who) + ": noise variance must be > 0");
}

std::size_t wrap(std::ptrdiff_t i, std::size_t K) {
    const auto k = static_cast<std::ptrdiff_t>(K);
    return static_cast<std::size_t>(((i % k) + k) % k);
}

struct Forward {
    CVector qy;    // Q y
    RVector c;     // sigma^-2 |Q y|^2
    RVector gate;  // softmax(a2 * c + b1)
    RVector w;     // a1 * gate + b2
    CVector h;     // Q^H diag(w) Q y
};

Forward cnn_forward(const CNNParams& p, const TransformQ& Q, const CVector& y, double noise_var) {
    Forward f;
    f.qy = transform_fft(Q, y);
    f.c = f.qy.cwiseAbs2() / noise_var;
    f.gate = softmax(circular_conv(p.a2, f.c) + p.b1);
    f.w = circular_conv(p.a1, f.gate) + p.b2;
    f.h = apply_spectral_filter_fft(Q, f.w, y);
    return f;
}

}  // namespace

CVector ula_steering(std::size_t M, double theta) {
    CVector a(idx(M));
    const double step = std::numbers::pi * std::sin(theta);
    for (std::size_t m = 0; m < M; ++m) a(idx(m)) = std::polar(1.0, step * static_cast<double>(m));
    return a;
}

SpectralGrid build_spectral_grid(std::size_t M, TransformMode mode, double noise_var) {
    require_noise(noise_var, "build_spectral_grid");
    if (M == 0) throw std::invalid_argument("build_spectral_grid: M must be >= 1");
    SpectralGrid g;
    g.mode = mode;
    g.M = M;
    const std::size_t K = mode == TransformMode::Circulant ? M : 2 * M;
    // Spatial frequency i/K gives a_m = exp(j 2 pi i m / K) = sqrt(K) conj(Q(i, m)), so the
    // rank-one covariance a a^H equals Q^H diag(K e_i) Q exactly in both transform modes.
    for (std::size_t i = 0; i < K; ++i) {
        RVector c = RVector::Zero(idx(K));
        c(idx(i)) = static_cast<double>(K);
        RVector w = c.array() / (c.array() + noise_var);
        g.spectra.push_back(std::move(c));
        g.filters.push_back(std::move(w));
    }
    return g;
}

RVector circular_conv(const RVector& u, const RVector& v) {
    if (u.size() != v.size()) throw std::invalid_argument("circular_conv: length mismatch");
    const std::size_t K = static_cast<std::size_t>(u.size());
    RVector out = RVector::Zero(u.size());
    for (std::size_t n = 0; n < K; ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            acc += u(idx(k)) * v(idx(wrap(static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(k), K)));
        out(idx(n)) = acc;
    }
    return out;
}

RVector circular_corr(const RVector& g, const RVector& v) {
    if (g.size() != v.size()) throw std::invalid_argument("circular_corr: length mismatch");
    const std::size_t K = static_cast<std::size_t>(g.size());
    RVector out = RVector::Zero(g.size());
    for (std::size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < K; ++n)
            acc += g(idx(n)) * v(idx(wrap(static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(k), K)));
        out(idx(k)) = acc;
    }
    return out;
}

RVector reverse_mod(const RVector& w) {
    const std::size_t K = static_cast<std::size_t>(w.size());
    RVector r(w.size());
    for (std::size_t n = 0; n < K; ++n) r(idx(n)) = w(idx(wrap(-static_cast<std::ptrdiff_t>(n), K)));
    return r;
}

NoLearnParams nolearn_params(const SpectralGrid& grid, const TransformQ& Q) {
    if (grid.K() == 0) throw std::invalid_argument("nolearn_params: empty spectral grid");
    if (grid.K() != Q.K() || grid.mode != Q.mode) throw std::invalid_argument("nolearn_params: grid does not match transform");
    NoLearnParams p;
    p.w0 = grid.filters.front();
    p.bias.resize(idx(grid.K()));
    const auto m = idx(grid.M);
    for (std::size_t i = 0; i < grid.K(); ++i) {
        const RVector w = grid.filters[i].cwiseMin(kWeightClip);
        if (grid.mode == TransformMode::Circulant) {
            p.bias(idx(i)) = (1.0 - w.array()).log().sum();
        } else {
            p.bias(idx(i)) = log_abs_det(CMatrix::Identity(m, m) - reconstruct_filter(w, Q));
        }
    }
    return p;
}

RVector nolearn_weights(const NoLearnParams& p, const RVector& c) {
    if (c.size() != p.w0.size() || p.bias.size() != p.w0.size())
        throw std::invalid_argument("nolearn_weights: length mismatch");
    return circular_conv(p.w0, softmax(circular_conv(reverse_mod(p.w0), c) + p.bias));
}

CVector transform_fft(const TransformQ& Q, const CVector& y) {
    if (y.size() != Q.Q.cols()) throw std::invalid_argument("transform_fft: observation length mismatch");
    const auto K = Q.Q.rows();
    if (K == 1) return y;  // kissfft does not handle length 1
    CVector padded = CVector::Zero(K);
    padded.head(y.size()) = y;
    Eigen::FFT<double> fft;
    CVector out(K);
    fft.fwd(out, padded);
    return out / std::sqrt(static_cast<double>(K));
}

CVector apply_spectral_filter(const TransformQ& Q, const RVector& w, const CVector& y) {
    if (w.size() != Q.Q.rows() || y.size() != Q.Q.cols())
        throw std::invalid_argument("apply_spectral_filter: dimension mismatch");
    return Q.Q.adjoint() * (w.cast<cd>().cwiseProduct(Q.Q * y));
}

CVector apply_spectral_filter_fft(const TransformQ& Q, const RVector& w, const CVector& y) {
    if (w.size() != Q.Q.rows()) throw std::invalid_argument("apply_spectral_filter_fft: weight length mismatch");
    const auto K = Q.Q.rows();
    const CVector z = w.cast<cd>().cwiseProduct(transform_fft(Q, y));
    if (K == 1) return z;
    Eigen::FFT<double> fft;
    CVector back(K);
    fft.inv(back, z);  // includes the 1/K factor
    return back.head(Q.Q.cols()) * std::sqrt(static_cast<double>(K));
}

CVector estimate_nolearn(const NoLearnParams& p, const TransformQ& Q, const CVector& y, double noise_var) {
    require_noise(noise_var, "estimate_nolearn");
    const RVector c = transform_fft(Q, y).cwiseAbs2() / noise_var;
    return apply_spectral_filter_fft(Q, nolearn_weights(p, c), y);
}

CNNParams CNNParams::from_nolearn(const NoLearnParams& p) {
    return CNNParams{p.w0, reverse_mod(p.w0), p.bias, RVector::Zero(p.w0.size())};
}

RVector cnn_weights(const CNNParams& p, const RVector& c) {
    if (c.size() != p.a1.size()) throw std::invalid_argument("cnn_weights: length mismatch");
    return circular_conv(p.a1, softmax(circular_conv(p.a2, c) + p.b1)) + p.b2;
}

CVector cnn_estimate(const CNNParams& p, const TransformQ& Q, const CVector& y, double noise_var) {
    require_noise(noise_var, "cnn_estimate");
    if (p.K() != Q.K()) throw std::invalid_argument("cnn_estimate: parameter length does not match transform");
    return cnn_forward(p, Q, y, noise_var).h;
}

double cnn_loss(const CNNParams& p, const TransformQ& Q, double noise_var, std::span<const EstimationSample> batch) {
    if (batch.empty()) throw std::invalid_argument("cnn_loss: empty batch");
    double acc = 0.0;
    for (const auto& s : batch) acc += (s.h - cnn_estimate(p, Q, s.y, noise_var)).squaredNorm();
    return acc / static_cast<double>(batch.size());
}

CNNParams cnn_backward(const CNNParams& p, const TransformQ& Q, double noise_var,
                       std::span<const EstimationSample> batch) {
    if (batch.empty()) throw std::invalid_argument("cnn_backward: empty batch");
    require_noise(noise_var, "cnn_backward");
    const auto K = p.a1.size();
    CNNParams g{RVector::Zero(K), RVector::Zero(K), RVector::Zero(K), RVector::Zero(K)};
    for (const auto& s : batch) {
        const Forward f = cnn_forward(p, Q, s.y, noise_var);
        // h_hat = sum_k w_k (Qy)_k q_k, so d||e||^2/dw_k = 2 Re(conj((Q e)_k) (Q y)_k)
        const CVector qe = transform_fft(Q, f.h - s.h);
        const RVector g_w = 2.0 * (qe.conjugate().cwiseProduct(f.qy)).real();
        g.b2 += g_w;
        g.a1 += circular_corr(g_w, f.gate);
        const RVector g_gate = circular_corr(g_w, p.a1);
        const RVector g_logits = f.gate.cwiseProduct((g_gate.array() - f.gate.dot(g_gate)).matrix());
        g.b1 += g_logits;
        g.a2 += circular_corr(g_logits, f.c);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    g.a1 *= inv;
    g.a2 *= inv;
    g.b1 *= inv;
    g.b2 *= inv;
    return g;
}

RVector pack(const CNNParams& p) {
    const auto K = p.a1.size();
    RVector flat(4 * K);
    flat << p.a1, p.a2, p.b1, p.b2;
    return flat;
}

CNNParams unpack_cnn(const RVector& flat, std::size_t K) {
    const auto k = idx(K);
    if (flat.size() != 4 * k) throw std::invalid_argument("unpack_cnn: flat vector has the wrong length");
    return CNNParams{flat.segment(0, k), flat.segment(k, k), flat.segment(2 * k, k), flat.segment(3 * k, k)};
}

CNNTrainResult cnn_train(const CNNParams& p0, const TransformQ& Q, double noise_var,
                         std::span<const EstimationSample> data, const TrainConfig& cfg) {
    require_noise(noise_var, "cnn_train");
    const std::size_t K = p0.K();
    auto loss_fn = [&](const RVector& theta, std::span<const EstimationSample> d) {
        return cnn_loss(unpack_cnn(theta, K), Q, noise_var, d);
    };
    auto grad_fn = [&](const RVector& theta, std::span<const EstimationSample> d) {
        return pack(cnn_backward(unpack_cnn(theta, K), Q, noise_var, d));
    };
    CNNTrainResult result;
    result.params = unpack_cnn(detail::train_flat(pack(p0), data, cfg, loss_fn, grad_fn, result.trace), K);
    return result;
}

CNNTrainResult cnn_train_stage(const TransformQ& Q, const SnrStage& stage, const CNNParams* previous,
                               const TrainConfig& cfg, std::size_t stage_index) {
    CNNParams start = stage.fallback;
    if (previous != nullptr && !stage.data.empty() &&
        cnn_loss(*previous, Q, stage.noise_var, stage.data) < cnn_loss(start, Q, stage.noise_var, stage.data))
        start = *previous;
    TrainConfig stage_cfg = cfg;
    stage_cfg.seed = cfg.seed + stage_index;
    return cnn_train(start, Q, stage.noise_var, stage.data, stage_cfg);
}

std::vector<CNNTrainResult> cnn_train_hierarchical(const TransformQ& Q, std::span<const SnrStage> stages,
                                                   const TrainConfig& cfg) {
    std::vector<CNNTrainResult> out;
    out.reserve(stages.size());
    for (std::size_t s = 0; s < stages.size(); ++s)
        out.push_back(cnn_train_stage(Q, stages[s], s > 0 ? &out.back().params : nullptr, cfg, s));
    return out;
}

}  // namespace mmsechan
