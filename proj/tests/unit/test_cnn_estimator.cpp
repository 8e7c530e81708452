#include "mmsechan/cnn_estimator.hpp"
#include "mmsechan/dataset_io.hpp"
#include "mmsechan/lmmse.hpp"
#include "mmsechan/snapshot.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <unsupported/Eigen/FFT>

#include <numbers>

using namespace mmsechan;
using std::numbers::pi;

namespace {

RVector circshift(const RVector& v, Eigen::Index s) {
    const auto K = v.size();
    RVector out(K);
    for (Eigen::Index n = 0; n < K; ++n) out((n + s) % K) = v(n);
    return out;
}

CNNParams random_cnn(std::mt19937_64& rng, Eigen::Index K) {
    return CNNParams{oracle::random_rvector(rng, K, 0.5), oracle::random_rvector(rng, K, 0.5),
                     oracle::random_rvector(rng, K), oracle::random_rvector(rng, K, 0.3)};
}

std::vector<EstimationSample> random_samples(std::mt19937_64& rng, Eigen::Index M, std::size_t B) {
    std::vector<EstimationSample> out;
    for (std::size_t b = 0; b < B; ++b) {
        const CVector h = oracle::random_cvector(rng, M, std::sqrt(0.5));
        out.push_back({h + oracle::random_cvector(rng, M, 0.3), h});
    }
    return out;
}

}  // namespace

TEST_CASE("circular convolution") {
    std::mt19937_64 rng(1);
    const RVector u = oracle::random_rvector(rng, 7), v = oracle::random_rvector(rng, 7);
    RVector delta = RVector::Zero(7);
    delta(0) = 1.0;
    CHECK(circular_conv(delta, v) == v);
    CHECK((circular_conv(u, v) - circular_conv(v, u)).cwiseAbs().maxCoeff() < 1e-12);

    // Transform, multiply, invert.
    Eigen::FFT<double> fft;
    CVector U, V, P;
    fft.fwd(U, CVector(u.cast<cd>()));
    fft.fwd(V, CVector(v.cast<cd>()));
    CVector prod = U.cwiseProduct(V);
    fft.inv(P, prod);
    CHECK((circular_conv(u, v) - P.real()).cwiseAbs().maxCoeff() < 1e-12);

    // circular_corr is the adjoint: <g, u * v> = <g star v, u>.
    const RVector g = oracle::random_rvector(rng, 7);
    CHECK(g.dot(circular_conv(u, v)) == doctest::Approx(circular_corr(g, v).dot(u)).epsilon(1e-12));

    RVector w(4);
    w << 1, 2, 3, 4;
    RVector r(4);
    r << 1, 4, 3, 2;
    CHECK(reverse_mod(w) == r);
}

TEST_CASE("spectral grid") {
    const double nv = 0.3;
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        const std::size_t M = 6;
        const SpectralGrid g = build_spectral_grid(M, mode, nv);
        const TransformQ Q = make_q(mode, M);
        CHECK(g.K() == Q.K());
        for (std::size_t i = 0; i < g.K(); ++i) {
            CHECK(g.filters[i].minCoeff() >= 0.0);
            CHECK(g.filters[i].maxCoeff() < 1.0);
            // The spectrum is exact: Q^H diag(c_i) Q is the rank-one steering covariance.
            const double freq = static_cast<double>(i) / static_cast<double>(g.K());
            CVector a(static_cast<Eigen::Index>(M));
            for (std::size_t m = 0; m < M; ++m) a(static_cast<Eigen::Index>(m)) = std::polar(1.0, 2.0 * pi * freq * static_cast<double>(m));
            CHECK((reconstruct_filter(g.spectra[i], Q) - a * a.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((g.filters[i] - circshift(g.filters[0], static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    // Pure noise drives every filter to zero.
    CHECK(build_spectral_grid(4, TransformMode::Circulant, 1e12).filters[1].maxCoeff() < 1e-10);
    // ula_steering covers the same atoms: sin(theta) = 2 freq.
    const CVector a = ula_steering(4, std::asin(0.5));
    CHECK(std::abs(a(1) - std::polar(1.0, pi * 0.5)) < 1e-14);
    CHECK_THROWS_AS(build_spectral_grid(4, TransformMode::Circulant, 0.0), std::invalid_argument);
}

TEST_CASE("transform paths agree") {
    std::mt19937_64 rng(2);
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        for (std::size_t M : {1u, 4u, 7u, 16u}) {
            const TransformQ Q = make_q(mode, M);
            const CVector y = oracle::random_cvector(rng, static_cast<Eigen::Index>(M));
            const RVector w = oracle::random_rvector(rng, static_cast<Eigen::Index>(Q.K()));
            CHECK((transform_fft(Q, y) - Q.Q * y).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((apply_spectral_filter_fft(Q, w, y) - apply_spectral_filter(Q, w, y)).cwiseAbs().maxCoeff() < 1e-10);
            // Q^H diag(w) Q applied to basis vectors reproduces the dense filter.
            const CMatrix W = reconstruct_filter(w, Q);
            for (std::size_t m = 0; m < M; ++m) {
                CVector e = CVector::Zero(static_cast<Eigen::Index>(M));
                e(static_cast<Eigen::Index>(m)) = 1.0;
                CHECK((apply_spectral_filter_fft(Q, w, e) - W.col(static_cast<Eigen::Index>(m))).cwiseAbs().maxCoeff() <
                      1e-10);
            }
        }
    }
}

TEST_CASE("estimate_nolearn") {
    const std::size_t M = 8;
    const double nv = 0.5;
    const TransformQ Q = make_q(TransformMode::Circulant, M);
    const NoLearnParams p = nolearn_params(build_spectral_grid(M, TransformMode::Circulant, nv), Q);
    CHECK(p.w0.minCoeff() >= 0.0);
    CHECK(p.w0.maxCoeff() < 1.0);
    CHECK(p.bias.allFinite());
    std::mt19937_64 rng(3);
    const CVector y = oracle::random_cvector(rng, static_cast<Eigen::Index>(M));

    NoLearnParams zero = p;
    zero.w0.setZero();
    CHECK(estimate_nolearn(zero, Q, y, nv).isZero(0.0));

    const RVector w = nolearn_weights(p, chat(y, Q, nv));
    CHECK(w.minCoeff() >= -1e-15);
    CHECK(w.maxCoeff() <= p.w0.maxCoeff() + 1e-15);

    // Grid-aligned single path at high SNR is recovered almost exactly.
    const double hi = 1e-4;
    const NoLearnParams ph = nolearn_params(build_spectral_grid(M, TransformMode::Circulant, hi), Q);
    std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
    double err = 0.0, power = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double freq = static_cast<double>(t % static_cast<int>(M)) / static_cast<double>(M);
        CVector h(static_cast<Eigen::Index>(M));
        const double phase = u(rng);
        for (std::size_t m = 0; m < M; ++m)
            h(static_cast<Eigen::Index>(m)) = std::polar(1.0, phase + 2.0 * pi * freq * static_cast<double>(m));
        const CVector yh = add_awgn(h, hi, rng());
        err += (estimate_nolearn(ph, Q, yh, hi) - h).squaredNorm();
        power += h.squaredNorm();
    }
    CHECK(err / power < 1e-2);
}

TEST_CASE("CNN with substituted parameters equals the no-learn estimator") {
    std::mt19937_64 rng(4);
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        const double nv = 0.2;
        const TransformQ Q = make_q(mode, 8);
        const NoLearnParams nl = nolearn_params(build_spectral_grid(8, mode, nv), Q);
        const CNNParams p = CNNParams::from_nolearn(nl);
        CHECK(p.b2.isZero(0.0));
        for (int t = 0; t < 100; ++t) {
            const CVector y = oracle::random_cvector(rng, 8);
            CHECK((cnn_estimate(p, Q, y, nv) - estimate_nolearn(nl, Q, y, nv)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    // a1 = 0, b2 = v: a fixed filter.
    const TransformQ Q = make_q(TransformMode::Toeplitz, 4);
    CNNParams fixed = random_cnn(rng, 8);
    fixed.a1.setZero();
    const CVector y = oracle::random_cvector(rng, 4);
    CHECK((cnn_estimate(fixed, Q, y, 0.5) - reconstruct_filter(fixed.b2, Q) * y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cnn_backward matches central differences") {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        for (std::size_t M : {2u, 3u, 4u}) {
            const TransformQ Q = make_q(mode, M);
            const auto K = static_cast<Eigen::Index>(Q.K());
            const CNNParams p = random_cnn(rng, K);
            const auto batch = random_samples(rng, static_cast<Eigen::Index>(M), 4);
            const double nv = 0.7;
            const RVector analytic = pack(cnn_backward(p, Q, nv, batch));
            const RVector numeric = oracle::central_differences(
                [&](const RVector& th) { return cnn_loss(unpack_cnn(th, Q.K()), Q, nv, batch); }, pack(p));
            worst = std::max(worst, oracle::max_rel_err(analytic, numeric));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("cnn_train and the warm-start schedule") {
    const std::size_t M = 8;
    const TransformQ Q = make_q(TransformMode::Circulant, M);
    const ChannelMatrix ch = normalize(synthesize_ula_channels(600, M, ClusterSpec{}, 3), static_cast<double>(M));
    auto samples = [&](double nv, std::uint64_t seed) {
        std::vector<EstimationSample> out;
        for (Eigen::Index r = 0; r < ch.rows(); ++r) {
            const CVector h = ch.row(r).transpose();
            out.push_back({add_awgn(h, nv, seed + static_cast<std::uint64_t>(r)), h});
        }
        return out;
    };

    TrainConfig cfg;
    cfg.batch_size = 20;
    cfg.epochs = 0;
    const double nv = 0.1;
    const CNNParams p0 = CNNParams::from_nolearn(nolearn_params(build_spectral_grid(M, Q.mode, nv), Q));
    const auto data = samples(nv, 100);
    CHECK(pack(cnn_train(p0, Q, nv, data, cfg).params) == pack(p0));

    cfg.epochs = 4;
    const auto r = cnn_train(p0, Q, nv, data, cfg);
    CHECK(r.params.all_finite());
    CHECK(cnn_loss(r.params, Q, nv, data) <= cnn_loss(p0, Q, nv, data));

    std::vector<SnrStage> stages;
    for (double snr : {10.0, 0.0}) {
        const double v = snr_to_noise_var(snr);
        stages.push_back({v, samples(v, 7), CNNParams::from_nolearn(nolearn_params(build_spectral_grid(M, Q.mode, v), Q))});
    }
    const auto h = cnn_train_hierarchical(Q, stages, cfg);
    REQUIRE(h.size() == 2);
    CHECK(pack(h[0].params) == pack(cnn_train(stages[0].fallback, Q, stages[0].noise_var, stages[0].data, cfg).params));
    for (std::size_t s = 0; s < 2; ++s)
        CHECK(cnn_loss(h[s].params, Q, stages[s].noise_var, stages[s].data) <=
              cnn_loss(stages[s].fallback, Q, stages[s].noise_var, stages[s].data));
    const auto again = cnn_train_hierarchical(Q, stages, cfg);
    CHECK(pack(again[1].params) == pack(h[1].params));
}

TEST_CASE("CNN snapshot round trip") {
    std::mt19937_64 rng(6);
    const CNNParams p = random_cnn(rng, 32);
    const std::string bytes = encode_snapshot(p, 16);
    std::size_t M = 0;
    const CNNParams q = decode_cnn_snapshot(bytes, &M);
    CHECK(M == 16);
    CHECK(pack(q) == pack(p));
    CHECK(encode_snapshot(q, 16) == bytes);
    try {
        decode_nn_snapshot(bytes);
        FAIL("type tag ignored");
    } catch (const DecodeError& e) {
        CHECK(e.kind() == DecodeError::Kind::TypeMismatch);
        CHECK(e.offset() == 6);
    }
    CHECK_THROWS_AS(decode_cnn_snapshot(bytes + "x"), DecodeError);
}
