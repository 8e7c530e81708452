#include "mmsechan/nn_predictor.hpp"

#include <stdexcept>

namespace mmsechan {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void check_input(const NNParams& p, const RVector& c) {
    if (c.size() != p.A1.cols()) throw std::invalid_argument("nn: input length does not match K");
}

cd apply_output(const RVector& out, const CVector& y) {
    const Eigen::Index m = y.size();
    if (out.size() != 2 * m) throw std::invalid_argument("nn: observation length does not match M");
    cd acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < m; ++i) acc += cd{out(i), out(m + i)} * y(i);
    return acc;
}

}  // namespace

NNParams NNParams::zeros(std::size_t M, std::size_t K, std::size_t n_grid) {
    NNParams p;
    p.A1 = RMatrix::Zero(idx(n_grid), idx(K));
    p.b1 = RVector::Zero(idx(n_grid));
    p.A2 = RMatrix::Zero(idx(2 * M), idx(n_grid));
    p.b2 = RVector::Zero(idx(2 * M));
    return p;
}

NNParams init_from_structured(const StructuredParams& params) {
    const auto m = params.A2.rows();
    NNParams p;
    p.A1 = params.A1;
    p.b1 = params.b;
    p.A2.resize(2 * m, params.A2.cols());
    p.A2.topRows(m) = params.A2.real();
    p.A2.bottomRows(m) = params.A2.imag();
    p.b2 = RVector::Zero(2 * m);
    return p;
}

RVector forward(const NNParams& p, const RVector& c) {
    check_input(p, c);
    return p.A2 * softmax(p.A1 * c + p.b1) + p.b2;
}

cd predict(const NNParams& p, const RVector& c, const CVector& y) { return apply_output(forward(p, c), y); }

double loss(const NNParams& p, std::span<const PredictionSample> batch) {
    if (batch.empty()) throw std::invalid_argument("nn loss: empty batch");
    double acc = 0.0;
    for (const auto& s : batch) acc += std::norm(s.target - predict(p, s.c, s.y));
    return acc / static_cast<double>(batch.size());
}

GradientSet backward(const NNParams& p, std::span<const PredictionSample> batch) {
    if (batch.empty()) throw std::invalid_argument("nn backward: empty batch");
    GradientSet g = NNParams::zeros(p.M(), p.K(), p.n_grid());
    const Eigen::Index m = idx(p.M());
    RVector g_out(2 * m);
    for (const auto& s : batch) {
        check_input(p, s.c);
        const RVector gate = softmax(p.A1 * s.c + p.b1);
        const RVector out = p.A2 * gate + p.b2;
        const cd err = apply_output(out, s.y) - s.target;
        // |e|^2 with e = sum_i (o_i + j o_{M+i}) y_i - h:
        // d/do_i = 2 Re(conj(e) y_i), d/do_{M+i} = 2 Re(conj(e) j y_i)
        for (Eigen::Index i = 0; i < m; ++i) {
            const cd t = std::conj(err) * s.y(i);
            g_out(i) = 2.0 * t.real();
            g_out(m + i) = -2.0 * t.imag();
        }
        g.A2.noalias() += g_out * gate.transpose();
        g.b2 += g_out;
        const RVector g_gate = p.A2.transpose() * g_out;
        const RVector g_logits = (gate.array() * (g_gate.array() - gate.dot(g_gate))).matrix();
        g.A1.noalias() += g_logits * s.c.transpose();
        g.b1 += g_logits;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    g.A1 *= inv;
    g.b1 *= inv;
    g.A2 *= inv;
    g.b2 *= inv;
    return g;
}

RVector pack(const NNParams& p) {
    RVector flat(p.A1.size() + p.b1.size() + p.A2.size() + p.b2.size());
    Eigen::Index o = 0;
    for (Eigen::Index r = 0; r < p.A1.rows(); ++r)
        for (Eigen::Index c = 0; c < p.A1.cols(); ++c) flat(o++) = p.A1(r, c);
    flat.segment(o, p.b1.size()) = p.b1;
    o += p.b1.size();
    for (Eigen::Index r = 0; r < p.A2.rows(); ++r)
        for (Eigen::Index c = 0; c < p.A2.cols(); ++c) flat(o++) = p.A2(r, c);
    flat.segment(o, p.b2.size()) = p.b2;
    return flat;
}

NNParams unpack(const RVector& flat, std::size_t M, std::size_t K, std::size_t n_grid) {
    NNParams p = NNParams::zeros(M, K, n_grid);
    const Eigen::Index expected = p.A1.size() + p.b1.size() + p.A2.size() + p.b2.size();
    if (flat.size() != expected) throw std::invalid_argument("nn unpack: flat vector has the wrong length");
    Eigen::Index o = 0;
    for (Eigen::Index r = 0; r < p.A1.rows(); ++r)
        for (Eigen::Index c = 0; c < p.A1.cols(); ++c) p.A1(r, c) = flat(o++);
    p.b1 = flat.segment(o, p.b1.size());
    o += p.b1.size();
    for (Eigen::Index r = 0; r < p.A2.rows(); ++r)
        for (Eigen::Index c = 0; c < p.A2.cols(); ++c) p.A2(r, c) = flat(o++);
    p.b2 = flat.segment(o, p.b2.size());
    return p;
}

NNTrainResult train(const NNParams& p0, std::span<const PredictionSample> data, const TrainConfig& cfg) {
    const std::size_t M = p0.M(), K = p0.K(), n = p0.n_grid();
    auto loss_fn = [&](const RVector& theta, std::span<const PredictionSample> d) {
        return loss(unpack(theta, M, K, n), d);
    };
    auto grad_fn = [&](const RVector& theta, std::span<const PredictionSample> d) {
        return pack(backward(unpack(theta, M, K, n), d));
    };
    NNTrainResult result;
    const RVector best = detail::train_flat(pack(p0), data, cfg, loss_fn, grad_fn, result.trace);
    result.params = unpack(best, M, K, n);
    return result;
}

}  // namespace mmsechan
