// Runs the ten acceptance criteria and prints one PASS/FAIL line per criterion.

#include "mmsechan/channel_model.hpp"
#include "mmsechan/cnn_estimator.hpp"
#include "mmsechan/experiment.hpp"
#include "mmsechan/grid_predictors.hpp"
#include "mmsechan/lmmse.hpp"
#include "mmsechan/nn_predictor.hpp"
#include "mmsechan/omp.hpp"
#include "mmsechan/seeds.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace mmsechan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

int failures = 0;

void run(int id, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0.0 && secs > limit_s) {
        o.pass = false;
        o.detail += fmt(" (over the %.0f s limit)", limit_s);
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d: %s  %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
}

DopplerSpec unit_spec(double bd_ts) { return DopplerSpec(1.0, kSpeedOfLight, bd_ts); }

// 1. Reformulated predictor against the direct LMMSE prediction.
Outcome reformulation() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t M = 1 + rng() % 8, l = 1 + rng() % 3;
        const DopplerSpec s = unit_spec(0.01 + 0.2 * u(rng));
        const auto cov = covariance_from_paths(sample_paths(1 + rng() % 25, s, rng()), M + l, s);
        const double nv = snr_to_noise_var(-10.0 + 30.0 * u(rng));
        const CVector y = oracle::random_cvector(rng, static_cast<Eigen::Index>(M));
        const cd a = predictor_filter(cov, M, l, nv).apply(y);
        const cd b = lmmse_predict_direct(cov, M, l, nv, y);
        worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
    }
    return {worst < 1e-10, fmt("max relative deviation %.3g over 500 instances", worst)};
}

// 2. Initialized networks against the closed-form estimators they are built from.
Outcome init_equivalence() {
    std::mt19937_64 rng(202);
    double nn = 0.0, cnn = 0.0;
    const DopplerSpec s = unit_spec(0.08);
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        const double nv = 0.1;
        const TransformQ Q = make_q(mode, 4);
        const StructuredParams sp = structured_params(build_prior_grid(Q.K(), s, 4, 1, nv).second, Q);
        const NNParams p = init_from_structured(sp);
        for (int t = 0; t < 500; ++t) {
            const CVector y = oracle::random_cvector(rng, 4);
            const RVector c = chat(y, Q, nv);
            nn = std::max(nn, std::abs(predict(p, c, y) - structured_predict(sp, c, y)));
        }
        const TransformQ Q16 = make_q(mode, 16);
        const NoLearnParams nl = nolearn_params(build_spectral_grid(16, mode, nv), Q16);
        const CNNParams cp = CNNParams::from_nolearn(nl);
        for (int t = 0; t < 500; ++t) {
            const CVector y = oracle::random_cvector(rng, 16);
            cnn = std::max(cnn, (cnn_estimate(cp, Q16, y, nv) - estimate_nolearn(nl, Q16, y, nv)).cwiseAbs().maxCoeff());
        }
    }
    return {nn < 1e-12 && cnn < 1e-12, fmt("NN max abs diff %.3g, CNN max abs diff %.3g (1000 inputs each)", nn, cnn)};
}

// 3. Analytic gradients against central differences.
Outcome gradients() {
    std::mt19937_64 rng(303);
    double nn = 0.0, cnn = 0.0;
    for (int t = 0; t < 16; ++t) {
        const std::size_t M = 1 + t % 4, K = 2 + t % 7, n = 1 + (t * 3) % 8;
        NNParams p;
        p.A1 = oracle::random_rmatrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
        p.b1 = oracle::random_rvector(rng, static_cast<Eigen::Index>(n));
        p.A2 = oracle::random_rmatrix(rng, static_cast<Eigen::Index>(2 * M), static_cast<Eigen::Index>(n));
        p.b2 = oracle::random_rvector(rng, static_cast<Eigen::Index>(2 * M));
        std::vector<PredictionSample> batch;
        for (int b = 0; b < 5; ++b)
            batch.push_back({oracle::random_rvector(rng, static_cast<Eigen::Index>(K)).cwiseAbs(),
                             oracle::random_cvector(rng, static_cast<Eigen::Index>(M)), oracle::random_cvector(rng, 1)(0)});
        const RVector num = oracle::central_differences(
            [&](const RVector& th) { return loss(unpack(th, M, K, n), batch); }, pack(p));
        nn = std::max(nn, oracle::max_rel_err(pack(backward(p, batch)), num));
    }
    for (auto mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        for (std::size_t M : {1u, 2u, 3u, 4u}) {
            const TransformQ Q = make_q(mode, M);
            const auto K = static_cast<Eigen::Index>(Q.K());
            const CNNParams p{oracle::random_rvector(rng, K, 0.5), oracle::random_rvector(rng, K, 0.5),
                              oracle::random_rvector(rng, K), oracle::random_rvector(rng, K, 0.3)};
            std::vector<EstimationSample> batch;
            for (int b = 0; b < 4; ++b) {
                const CVector h = oracle::random_cvector(rng, static_cast<Eigen::Index>(M), std::sqrt(0.5));
                batch.push_back({h + oracle::random_cvector(rng, static_cast<Eigen::Index>(M), 0.3), h});
            }
            const RVector num = oracle::central_differences(
                [&](const RVector& th) { return cnn_loss(unpack_cnn(th, Q.K()), Q, 0.7, batch); }, pack(p));
            cnn = std::max(cnn, oracle::max_rel_err(pack(cnn_backward(p, Q, 0.7, batch)), num));
        }
    }
    return {nn < 1e-5 && cnn < 1e-5, fmt("NN max relative error %.3g, CNN max relative error %.3g", nn, cnn)};
}

// 4. Averaged path covariances approach the Bessel limit.
Outcome jakes_limit() {
    const DopplerSpec s = unit_spec(0.05);
    const std::size_t draws = 10000, K = 9;
    std::vector<cd> avg(K, cd{0.0, 0.0});
    for (std::size_t d = 0; d < draws; ++d) {
        const auto c = covariance_from_paths(sample_paths(200, s, derive_seed(404, {d})), K, s);
        for (std::size_t k = 0; k < K; ++k) avg[k] += c[k] / static_cast<double>(draws);
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double j0 = std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * s.normalized_bandwidth() * static_cast<double>(k));
        worst = std::max(worst, std::abs(avg[k] - j0));
    }
    return {worst < 0.01, fmt("max |MC - J0| over lags 0..8: %.3g", worst)};
}

// 5. A one-sample gridded predictor is the LMMSE predictor of that sample.
Outcome gridded_single() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t M = 1 + rng() % 8, l = 1 + rng() % 3;
        const DopplerSpec s = unit_spec(0.08);
        const double nv = snr_to_noise_var(-10.0 + static_cast<double>(rng() % 31));
        const auto cov = covariance_from_paths(sample_paths(1 + rng() % 5, s, rng()), M + l, s);
        const FilterBank bank = make_filter_bank({cov}, M, l, nv);
        const CVector y = oracle::random_cvector(rng, static_cast<Eigen::Index>(M));
        const cd ref = lmmse_predict_direct(cov, M, l, nv, y);
        worst = std::max(worst, std::abs(gridded_predict(bank, y, nv) - ref) / std::max(std::abs(ref), 1.0));
    }
    return {worst < 1e-12, fmt("max deviation %.3g over 200 instances", worst)};
}

// 6. OMP recovery over orthonormal atoms and the genie bound.
Outcome omp_checks() {
    const std::size_t M = 16;
    CMatrix F(M, M);
    for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < M; ++c)
            F(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r * c) / static_cast<double>(M));
    const Dictionary dft = Dictionary::from_columns(F);
    std::mt19937_64 rng(606);
    double exact = 0.0;
    for (int t = 0; t < 200; ++t) {
        const CVector g = oracle::random_cvector(rng, 2);
        const auto a = static_cast<Eigen::Index>(rng() % M);
        const auto b = static_cast<Eigen::Index>((static_cast<std::size_t>(a) + 1 + rng() % (M - 1)) % M);
        const CVector one = g(0) * dft.atoms.col(a);
        const CVector two = one + g(1) * dft.atoms.col(b);
        exact = std::max({exact, (omp(one, dft, 1) - one).norm(), (omp(two, dft, 2) - two).norm()});
    }
    const Dictionary d = steering_dictionary(M, 4);
    int violations = 0;
    for (int t = 0; t < 1000; ++t) {
        const CVector h = oracle::random_cvector(rng, static_cast<Eigen::Index>(M), std::sqrt(0.5));
        const CVector y = add_awgn(h, snr_to_noise_var(-10.0 + static_cast<double>(t % 21)), rng());
        const GenieOmpResult gr = genie_omp(y, d, h, M / 2);
        for (std::size_t s = 1; s <= M / 2; ++s) violations += gr.squared_error <= (h - omp(y, d, s)).squaredNorm() ? 0 : 1;
    }
    return {exact < 1e-10 && violations == 0,
            fmt("max recovery error %.3g, genie violations %.0f / 8000", exact, violations)};
}

ExperimentConfig quiet(ExperimentConfig c) {
    c.use_cache = false;
    c.output = (fs::temp_directory_path() / "mmsechan_acceptance.csv").string();
    return c;
}

// 7. Trained Toeplitz NN against the Jakes and strongest-path LMMSE baselines.
Outcome prediction_ordering() {
    const std::vector<double> snrs{-15.0, -10.0, 5.0, 10.0, 15.0};
    std::vector<double> nn(snrs.size()), jakes(snrs.size()), sp(snrs.size());
    std::size_t tests = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ExperimentConfig c = quiet(ExperimentConfig::predict_defaults());
        c.paths = 3;
        c.seed = seed;
        c.snr_override = snrs;
        c.methods = {"lmmse-sp", "lmmse-jakes", "nn-toep"};
        tests = c.split.test_count();
        const ResultTable t = run_predict(c);
        for (std::size_t i = 0; i < snrs.size(); ++i) {
            nn[i] += t.at(snrs[i], "nn-toep") / 3.0;
            jakes[i] += t.at(snrs[i], "lmmse-jakes") / 3.0;
            sp[i] += t.at(snrs[i], "lmmse-sp") / 3.0;
        }
    }
    bool ok = tests >= 5000;
    std::string detail = fmt("%.0f test realizations x 3 seeds;", static_cast<double>(tests));
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        const bool high = snrs[i] > 0.0;
        const bool pass = high ? nn[i] < jakes[i] : nn[i] <= 1.2 * sp[i];
        ok = ok && pass;
        detail += fmt(high ? " %g dB nn %.4g < jakes %.4g;" : " %g dB nn %.4g <= 1.2 sp %.4g;", snrs[i], nn[i],
                      high ? jakes[i] : 1.2 * sp[i]);
    }
    return {ok, detail};
}

// 8 and 9 share one estimation run.
ResultTable estimation_table;
std::vector<double> estimation_snrs;
std::size_t estimation_tests = 0;

Outcome learning_gain() {
    ExperimentConfig c = quiet(ExperimentConfig::estimate_defaults());
    c.methods = {"identity", "no-learn", "cnn"};
    estimation_snrs = c.snr_points();
    estimation_tests = c.split.test_count();
    estimation_table = run_estimate(c);
    bool ok = c.antennas == 16 && estimation_tests >= 5000;
    double worst = -INFINITY;
    for (double snr : estimation_snrs) {
        const double gap = estimation_table.at(snr, "cnn") - estimation_table.at(snr, "no-learn");
        worst = std::max(worst, gap);
        ok = ok && gap <= 0.0;
    }
    return {ok, fmt("M = 16, %.0f test vectors, %.0f SNR points, max(cnn - no-learn) = %.3g",
                    static_cast<double>(estimation_tests), static_cast<double>(estimation_snrs.size()), worst)};
}

Outcome identity_sanity() {
    if (estimation_table.rows.empty()) return {false, "estimation run unavailable"};
    // Per-vector ||n||^2 / M has variance sigma^4 / M for circular Gaussian noise.
    const double n = static_cast<double>(estimation_tests) * 16.0;
    double worst = 0.0;
    for (double snr : estimation_snrs) {
        const double nv = snr_to_noise_var(snr);
        worst = std::max(worst, std::abs(estimation_table.at(snr, "identity") - nv) / (nv / std::sqrt(n)));
    }
    return {worst < 3.0, fmt("max |NMSE - sigma^2| = %.3g standard errors", worst)};
}

// 10. Byte-identical CLI output across runs.
Outcome cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / "mmsechan_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string detail;
    bool ok = true;
    for (const std::string task : {"predict", "estimate"}) {
        std::string bytes[2];
        for (int r = 0; r < 2; ++r) {
            const fs::path out = dir / (task + std::to_string(r) + ".csv");
            const std::string cmd = std::string("\"") + MMSECHAN_CLI_PATH + "\" " + task + " --seed 7 --no-cache -o \"" +
                                    out.string() + "\"";
            if (std::system(cmd.c_str()) != 0) return {false, task + " run failed"};
            std::ifstream in(out, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            bytes[r] = ss.str();
        }
        const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
        ok = ok && same;
        detail += task + (same ? " identical" : " differs") + fmt(" (%.0f bytes); ", static_cast<double>(bytes[0].size()));
    }
    fs::remove_all(dir);
    return {ok, detail};
}

}  // namespace

int main() {
    run(1, 5.0, reformulation);
    run(2, 5.0, init_equivalence);
    run(3, 30.0, gradients);
    run(4, 60.0, jakes_limit);
    run(5, 0.0, gridded_single);
    run(6, 0.0, omp_checks);
    run(7, 600.0, prediction_ordering);
    run(8, 600.0, learning_gain);
    run(9, 0.0, identity_sanity);
    run(10, 0.0, cli_determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
