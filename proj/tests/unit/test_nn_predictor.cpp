#include "mmsechan/nn_predictor.hpp"
#include "mmsechan/snapshot.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace mmsechan;

namespace {

NNParams random_params(std::mt19937_64& rng, std::size_t M, std::size_t K, std::size_t n) {
    NNParams p;
    p.A1 = oracle::random_rmatrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
    p.b1 = oracle::random_rvector(rng, static_cast<Eigen::Index>(n));
    p.A2 = oracle::random_rmatrix(rng, static_cast<Eigen::Index>(2 * M), static_cast<Eigen::Index>(n));
    p.b2 = oracle::random_rvector(rng, static_cast<Eigen::Index>(2 * M));
    return p;
}

std::vector<PredictionSample> random_batch(std::mt19937_64& rng, std::size_t M, std::size_t K, std::size_t B) {
    std::vector<PredictionSample> out;
    for (std::size_t b = 0; b < B; ++b) {
        PredictionSample s;
        s.c = oracle::random_rvector(rng, static_cast<Eigen::Index>(K)).cwiseAbs();
        s.y = oracle::random_cvector(rng, static_cast<Eigen::Index>(M));
        s.target = oracle::random_cvector(rng, 1)(0);
        out.push_back(s);
    }
    return out;
}

// Loop-level two-layer network, written independently of the Eigen expressions.
RVector reference_forward(const NNParams& p, const RVector& c) {
    const auto n = p.A1.rows(), K = p.A1.cols(), out = p.A2.rows();
    std::vector<double> z(static_cast<std::size_t>(n));
    double zmax = -1e300;
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = p.b1(i);
        for (Eigen::Index k = 0; k < K; ++k) acc += p.A1(i, k) * c(k);
        z[static_cast<std::size_t>(i)] = acc;
        zmax = std::max(zmax, acc);
    }
    double norm = 0.0;
    for (auto& v : z) norm += (v = std::exp(v - zmax));
    RVector o(out);
    for (Eigen::Index r = 0; r < out; ++r) {
        double acc = p.b2(r);
        for (Eigen::Index i = 0; i < n; ++i) acc += p.A2(r, i) * z[static_cast<std::size_t>(i)] / norm;
        o(r) = acc;
    }
    return o;
}

}  // namespace

TEST_CASE("init_from_structured reproduces the structured predictor") {
    const DopplerSpec s(1.0, kSpeedOfLight, 0.08);
    std::mt19937_64 rng(1);
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        const TransformQ Q = make_q(mode, 4);
        const auto bank = build_prior_grid(Q.K(), s, 4, 1, 0.1).second;
        const StructuredParams sp = structured_params(bank, Q);
        const NNParams p = init_from_structured(sp);
        CHECK(p.A2.rows() == 8);
        CHECK(p.A2.cols() == static_cast<Eigen::Index>(Q.K()));
        CHECK(p.b2.isZero(0.0));
        for (int t = 0; t < 100; ++t) {
            const CVector y = oracle::random_cvector(rng, 4);
            const RVector c = chat(y, Q, 0.1);
            CHECK(std::abs(predict(p, c, y) - structured_predict(sp, c, y)) < 1e-12);
        }
    }
}

TEST_CASE("forward and predict") {
    std::mt19937_64 rng(2);
    NNParams p = random_params(rng, 3, 5, 4);
    for (int t = 0; t < 20; ++t) {
        const RVector c = oracle::random_rvector(rng, 5);
        CHECK((forward(p, c) - reference_forward(p, c)).cwiseAbs().maxCoeff() < 1e-12);
    }
    const RVector c = oracle::random_rvector(rng, 5);
    const RVector before = forward(p, c);
    p.b1.array() += 50.0;
    CHECK((forward(p, c) - before).cwiseAbs().maxCoeff() < 1e-12);

    NNParams fixed = p;
    fixed.A2.setZero();
    CHECK(forward(fixed, c) == fixed.b2);

    const CVector y1 = oracle::random_cvector(rng, 3), y2 = oracle::random_cvector(rng, 3);
    const cd a{0.3, -1.2};
    CHECK(predict(p, c, CVector::Zero(3)) == cd{0.0, 0.0});
    CHECK(std::abs(predict(p, c, a * y1 + y2) - (a * predict(p, c, y1) + predict(p, c, y2))) < 1e-12);
    CHECK_THROWS_AS(forward(p, RVector::Zero(4)), std::invalid_argument);
}

TEST_CASE("loss") {
    NNParams p = NNParams::zeros(1, 1, 1);
    p.b2 << 1.0, 0.0;  // filter = 1
    std::vector<PredictionSample> b{{RVector::Zero(1), CVector::Constant(1, cd{2.0, 1.0}), cd{2.0, 1.0}}};
    CHECK(loss(p, b) == 0.0);
    b[0].target = cd{1.0, 0.0};
    CHECK(loss(p, b) == doctest::Approx(2.0));
    CHECK_THROWS_AS(loss(p, std::span<const PredictionSample>{}), std::invalid_argument);
}

TEST_CASE("backward matches central differences") {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int t = 0; t < 12; ++t) {
        const std::size_t M = 1 + t % 4, K = 2 + t % 7, n = 1 + (t * 3) % 8;
        const NNParams p = random_params(rng, M, K, n);
        const auto batch = random_batch(rng, M, K, 5);
        const RVector analytic = pack(backward(p, batch));
        const RVector numeric = oracle::central_differences(
            [&](const RVector& th) { return loss(unpack(th, M, K, n), batch); }, pack(p));
        worst = std::max(worst, oracle::max_rel_err(analytic, numeric));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("zero gradient at a realizable optimum") {
    std::mt19937_64 rng(4);
    const NNParams p = random_params(rng, 2, 3, 2);
    auto batch = random_batch(rng, 2, 3, 6);
    for (auto& s : batch) s.target = predict(p, s.c, s.y);
    CHECK(pack(backward(p, batch)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pack and unpack") {
    std::mt19937_64 rng(5);
    const NNParams p = random_params(rng, 2, 3, 4);
    const NNParams q = unpack(pack(p), 2, 3, 4);
    CHECK(q.A1 == p.A1);
    CHECK(q.b1 == p.b1);
    CHECK(q.A2 == p.A2);
    CHECK(q.b2 == p.b2);
    CHECK_THROWS_AS(unpack(pack(p), 2, 3, 5), std::invalid_argument);
}

TEST_CASE("train") {
    const DopplerSpec s(1.0, kSpeedOfLight, 0.08);
    const double nv = 0.05;
    const TransformQ Q = make_q(TransformMode::Toeplitz, 4);
    const auto [grid, bank] = build_prior_grid(8, s, 4, 1, nv);
    const NNParams p0 = init_from_structured(structured_params(bank, Q));

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    std::vector<PredictionSample> data;
    for (int i = 0; i < 400; ++i) {
        const PathSet ps{{make_path(grid.doas[static_cast<std::size_t>(i) % 8], u(rng), 1.0, s)}};
        const ChannelBlock blk = synthesize_block(ps, 4, 1, s);
        const CVector y = add_awgn(blk.observation(), nv, rng());
        data.push_back({chat(y, Q, nv), y, blk.target(1)});
    }

    TrainConfig cfg;
    cfg.epochs = 0;
    const auto none = train(p0, data, cfg);
    CHECK(pack(none.params) == pack(p0));
    CHECK(none.trace.losses.size() == 1);

    cfg.epochs = 20;
    cfg.seed = 9;
    const auto r = train(p0, data, cfg);
    CHECK(r.params.all_finite());
    CHECK(r.trace.losses.front() == doctest::Approx(loss(p0, data)));
    CHECK(loss(r.params, data) <= loss(p0, data));
    CHECK(loss(r.params, data) == doctest::Approx(r.trace.losses[r.trace.best_epoch]));
    CHECK(pack(train(p0, data, cfg).params) == pack(r.params));

    cfg.seed = 10;
    CHECK(pack(train(p0, data, cfg).params) != pack(r.params));
}

TEST_CASE("NN snapshot round trip") {
    std::mt19937_64 rng(7);
    const NNParams p = random_params(rng, 4, 8, 6);
    const std::string bytes = encode_snapshot(p);
    CHECK(bytes.size() == 20 + 8 * (6 * 8 + 6 + 8 * 6 + 8));
    CHECK(bytes.substr(0, 4) == "MMSP");
    const NNParams q = decode_nn_snapshot(bytes);
    CHECK(encode_snapshot(q) == bytes);
    CHECK(pack(q) == pack(p));

    CHECK_THROWS_AS(decode_cnn_snapshot(bytes), DecodeError);
    try {
        decode_nn_snapshot(bytes.substr(0, bytes.size() - 3));
        FAIL("truncated snapshot decoded");
    } catch (const DecodeError& e) {
        CHECK(e.kind() == DecodeError::Kind::Truncated);
    }
    std::string bad = bytes;
    bad[0] = 'X';
    try {
        decode_nn_snapshot(bad);
        FAIL("bad magic decoded");
    } catch (const DecodeError& e) {
        CHECK(e.kind() == DecodeError::Kind::BadMagic);
        CHECK(e.offset() == 0);
    }
    std::string huge = bytes.substr(0, 20);
    huge[8] = huge[9] = huge[10] = huge[11] = '\xff';  // M = 2^32 - 1
    CHECK_THROWS_AS(decode_nn_snapshot(huge), DecodeError);
}
