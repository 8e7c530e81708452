#pragma once

#include "mmsechan/linalg.hpp"

#include <cstdint>
#include <vector>

namespace mmsechan {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Mobility and carrier parameters that set the Doppler spread of a flat-fading link.
struct DopplerSpec {
    double velocity_mps = 0.0;
    double carrier_hz = 1.0;
    double symbol_duration_s = 1.0;

    DopplerSpec() = default;
    DopplerSpec(double velocity_mps, double carrier_hz, double symbol_duration_s);

    /// B_D = v f_c / c.
    double doppler_bandwidth() const noexcept { return velocity_mps * carrier_hz / kSpeedOfLight; }
    /// Normalized Doppler bandwidth B_D * T_s (cycles per symbol).
    double normalized_bandwidth() const noexcept { return doppler_bandwidth() * symbol_duration_s; }
};

double kmh_to_mps(double kmh);

struct Path {
    double phase = 0.0;       // psi_p in [0, 2pi)
    double doa = 0.0;         // delta_p in [0, 2pi)
    cd gain{1.0, 0.0};        // (1/sqrt(P)) exp(j psi_p)
    double doppler_hz = 0.0;  // cos(delta_p) B_D
};

/// Plane-wave paths of one user trajectory block.
struct PathSet {
    std::vector<Path> paths;

    std::size_t size() const noexcept { return paths.size(); }
    /// Index of the path with the largest |a_p| (ties resolved to the lowest index).
    std::size_t strongest() const;
};

/// Builds a single path with the given DoA and phase; gain magnitude is `amplitude`.
Path make_path(double doa, double phase, double amplitude, const DopplerSpec& spec);

/// Discrete autocovariance samples R_h[0..K-1], with R_h[-k] = conj(R_h[k]).
class CovarianceFunction {
public:
    CovarianceFunction() = default;
    explicit CovarianceFunction(std::vector<cd> samples);

    std::size_t size() const noexcept { return samples_.size(); }
    const std::vector<cd>& samples() const noexcept { return samples_; }
    cd operator[](std::size_t k) const { return samples_.at(k); }
    /// Signed lag access; negative lags are conjugated.
    cd at(std::ptrdiff_t lag) const;

private:
    std::vector<cd> samples_;
};

/// Length M+N channel trajectory h[0..M+N-1].
struct ChannelBlock {
    CVector coeffs;
    std::size_t obs_len = 0;
    std::size_t pred_len = 0;

    /// Observation vector in filter ordering [h[M-1], ..., h[0]].
    CVector observation() const;
    /// h[M-1+l], the coefficient l steps past the last observation (1 <= l <= N).
    cd target(std::size_t l) const;
};

PathSet sample_paths(std::size_t P, const DopplerSpec& spec, std::uint64_t seed);

ChannelBlock synthesize_block(const PathSet& paths, std::size_t M, std::size_t N, const DopplerSpec& spec);

CovarianceFunction covariance_from_paths(const PathSet& paths, std::size_t K, const DopplerSpec& spec);

/// Jakes limit R_h[k] = J0(2 pi k T_s B_D).
CovarianceFunction jakes_covariance(const DopplerSpec& spec, std::size_t K);

/// Hermitian Toeplitz matrix with entry (r, c) = R_h[c - r].
CMatrix build_covariance_matrix(const CovarianceFunction& cov, std::size_t M);

/// y = h + n, n circularly-symmetric complex Gaussian with variance noise_var per entry.
CVector add_awgn(const CVector& h, double noise_var, std::uint64_t seed);

/// sigma_n^2 = 10^(-snr_db / 10).
double snr_to_noise_var(double snr_db);

}  // namespace mmsechan
