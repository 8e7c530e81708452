#include "mmsechan/channel_model.hpp"

#include "mmsechan/bessel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mmsechan {

using std::numbers::pi;

DopplerSpec::DopplerSpec(double velocity, double carrier, double symbol_duration)
    : velocity_mps(velocity), carrier_hz(carrier), symbol_duration_s(symbol_duration) {
    if (!(velocity_mps >= 0.0)) throw std::invalid_argument("DopplerSpec: velocity must be >= 0");
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("DopplerSpec: carrier must be > 0");
    if (!(symbol_duration_s > 0.0)) throw std::invalid_argument("DopplerSpec: symbol duration must be > 0");
}

double kmh_to_mps(double kmh) { return kmh / 3.6; }

std::size_t PathSet::strongest() const {
    if (paths.empty()) throw std::invalid_argument("PathSet::strongest: empty path set");
    std::size_t best = 0;
    for (std::size_t p = 1; p < paths.size(); ++p)
        if (std::abs(paths[p].gain) > std::abs(paths[best].gain)) best = p;
    return best;
}

Path make_path(double doa, double phase, double amplitude, const DopplerSpec& spec) {
    Path p;
    p.doa = doa;
    p.phase = phase;
    p.gain = std::polar(amplitude, phase);
    p.doppler_hz = std::cos(doa) * spec.doppler_bandwidth();
    return p;
}

CovarianceFunction::CovarianceFunction(std::vector<cd> samples) : samples_(std::move(samples)) {}

cd CovarianceFunction::at(std::ptrdiff_t lag) const {
    if (lag >= 0) return samples_.at(static_cast<std::size_t>(lag));
    return std::conj(samples_.at(static_cast<std::size_t>(-lag)));
}

CVector ChannelBlock::observation() const {
    CVector h(static_cast<Eigen::Index>(obs_len));
    for (std::size_t i = 0; i < obs_len; ++i) h(static_cast<Eigen::Index>(i)) = coeffs(static_cast<Eigen::Index>(obs_len - 1 - i));
    return h;
}

cd ChannelBlock::target(std::size_t l) const {
    if (l < 1 || l > pred_len) throw std::out_of_range("ChannelBlock::target: step outside prediction interval");
    return coeffs(static_cast<Eigen::Index>(obs_len - 1 + l));
}

PathSet sample_paths(std::size_t P, const DopplerSpec& spec, std::uint64_t seed) {
    if (P == 0) throw std::invalid_argument("sample_paths: P must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
    const double amplitude = 1.0 / std::sqrt(static_cast<double>(P));
    PathSet set;
    set.paths.reserve(P);
    for (std::size_t p = 0; p < P; ++p) {
        const double phase = angle(rng);
        const double doa = angle(rng);
        set.paths.push_back(make_path(doa, phase, amplitude, spec));
    }
    return set;
}

ChannelBlock synthesize_block(const PathSet& paths, std::size_t M, std::size_t N, const DopplerSpec& spec) {
    if (M == 0) throw std::invalid_argument("synthesize_block: M must be >= 1");
    ChannelBlock block;
    block.obs_len = M;
    block.pred_len = N;
    block.coeffs = CVector::Zero(static_cast<Eigen::Index>(M + N));
    for (const Path& p : paths.paths) {
        const double step = 2.0 * pi * p.doppler_hz * spec.symbol_duration_s;
        for (std::size_t m = 0; m < M + N; ++m)
            block.coeffs(static_cast<Eigen::Index>(m)) += p.gain * std::polar(1.0, step * static_cast<double>(m));
    }
    return block;
}

CovarianceFunction covariance_from_paths(const PathSet& paths, std::size_t K, const DopplerSpec& spec) {
    if (K == 0) throw std::invalid_argument("covariance_from_paths: K must be >= 1");
    std::vector<cd> r(K, cd{0.0, 0.0});
    for (const Path& p : paths.paths) {
        const double power = std::norm(p.gain);
        const double step = 2.0 * pi * p.doppler_hz * spec.symbol_duration_s;
        for (std::size_t k = 0; k < K; ++k) r[k] += power * std::polar(1.0, step * static_cast<double>(k));
    }
    return CovarianceFunction(std::move(r));
}

CovarianceFunction jakes_covariance(const DopplerSpec& spec, std::size_t K) {
    if (K == 0) throw std::invalid_argument("jakes_covariance: K must be >= 1");
    std::vector<cd> r(K);
    const double scale = 2.0 * pi * spec.normalized_bandwidth();
    for (std::size_t k = 0; k < K; ++k) r[k] = bessel_j0(scale * static_cast<double>(k));
    return CovarianceFunction(std::move(r));
}

CMatrix build_covariance_matrix(const CovarianceFunction& cov, std::size_t M) {
    if (cov.size() < M) throw std::invalid_argument("build_covariance_matrix: need at least M covariance samples");
    const auto n = static_cast<Eigen::Index>(M);
    CMatrix S(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = r; c < n; ++c) {
            const cd v = cov[static_cast<std::size_t>(c - r)];
            S(r, c) = v;
            S(c, r) = std::conj(v);
        }
        S(r, r) = cd{cov[0].real(), 0.0};
    }
    return S;
}

CVector add_awgn(const CVector& h, double noise_var, std::uint64_t seed) {
    if (!(noise_var >= 0.0)) throw std::invalid_argument("add_awgn: noise variance must be >= 0");
    if (noise_var == 0.0) return h;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
    CVector y = h;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        y(i) += cd{re, im};
    }
    return y;
}

double snr_to_noise_var(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace mmsechan
