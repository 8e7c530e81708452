#include "mmsechan/dataset_io.hpp"

#include "mmsechan/seeds.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace mmsechan {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError(DecodeError::Kind::Io, 0, "cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

std::string encode_channels(const ChannelMatrix& channels) {
    std::string out;
    out.reserve(kChannelHeaderSize + 16 * static_cast<std::size_t>(channels.size()));
    out.append(kChannelMagic);
    le::put<std::uint16_t>(out, kChannelFileVersion);
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(channels.rows()));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(channels.cols()));
    for (Eigen::Index r = 0; r < channels.rows(); ++r)
        for (Eigen::Index c = 0; c < channels.cols(); ++c) {
            le::put_f64(out, channels(r, c).real());
            le::put_f64(out, channels(r, c).imag());
        }
    return out;
}

ChannelMatrix decode_channels(std::string_view bytes) {
    le::Reader rd(bytes);
    if (bytes.size() < kChannelMagic.size() || bytes.substr(0, kChannelMagic.size()) != kChannelMagic)
        throw DecodeError(DecodeError::Kind::BadMagic, 0, "bad channel file magic");
    rd.take(kChannelMagic.size());
    const std::size_t version_at = rd.offset();
    const auto version = rd.get<std::uint16_t>();
    if (version != kChannelFileVersion)
        throw DecodeError(DecodeError::Kind::VersionMismatch, version_at,
                          "unsupported channel file version " + std::to_string(version));
    const auto count = rd.get<std::uint32_t>();
    const auto dim = rd.get<std::uint32_t>();
    const std::size_t payload = 16ull * count * dim;
    if (rd.remaining() < payload)
        throw DecodeError(DecodeError::Kind::Truncated, bytes.size(),
                          "payload truncated: expected " + std::to_string(payload) + " bytes");
    if (rd.remaining() > payload)
        throw DecodeError(DecodeError::Kind::TrailingBytes, kChannelHeaderSize + payload, "trailing bytes after payload");
    ChannelMatrix m(idx(count), idx(dim));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double re = rd.get_f64();
            const double im = rd.get_f64();
            m(r, c) = cd{re, im};
        }
    return m;
}

void save_channels(const std::string& path, const ChannelMatrix& channels) {
    write_file_bytes(path, encode_channels(channels));
}

ChannelMatrix load_channels(const std::string& path) { return decode_channels(read_file_bytes(path)); }

ChannelMatrix normalize(const ChannelMatrix& channels, double target) {
    if (!(target > 0.0)) throw std::invalid_argument("normalize: target power must be > 0");
    if (channels.rows() == 0) throw std::invalid_argument("normalize: empty dataset");
    const double mean_power = channels.squaredNorm() / static_cast<double>(channels.rows());
    if (!(mean_power > 0.0)) throw std::invalid_argument("normalize: dataset has zero power");
    return channels * std::sqrt(target / mean_power);
}

std::vector<WindowItem> window_trajectory(const CVector& trajectory, std::size_t M, std::size_t l,
                                          std::size_t stride) {
    if (M == 0 || l == 0) throw std::invalid_argument("window_trajectory: M and l must be >= 1");
    const std::size_t group = M + l;
    if (stride == 0) stride = group;
    std::vector<WindowItem> items;
    const auto n = static_cast<std::size_t>(trajectory.size());
    for (std::size_t s = 0; s + group <= n; s += stride) {
        WindowItem it;
        it.obs.resize(idx(M));
        for (std::size_t i = 0; i < M; ++i) it.obs(idx(i)) = trajectory(idx(s + M - 1 - i));
        it.target = trajectory(idx(s + M - 1 + l));
        it.start = s;
        items.push_back(std::move(it));
    }
    return items;
}

std::vector<WindowItem> window_channels(const ChannelMatrix& channels, std::size_t M, std::size_t l,
                                        std::size_t stride) {
    if (channels.cols() == 1) return window_trajectory(channels.col(0), M, l, stride);
    std::vector<WindowItem> items;
    for (Eigen::Index r = 0; r < channels.rows(); ++r) {
        auto row_items = window_trajectory(channels.row(r).transpose(), M, l, stride);
        for (auto& it : row_items) {
            it.row = static_cast<std::size_t>(r);
            items.push_back(std::move(it));
        }
    }
    return items;
}

SplitIndices split_indices(std::size_t count, const SplitSpec& spec) {
    if (spec.train_batch_size == 0 || spec.test_batch_size == 0)
        throw std::invalid_argument("split: batch sizes must be >= 1");
    const std::size_t need = spec.train_count() + spec.test_count();
    if (need > count)
        throw std::invalid_argument("split: need " + std::to_string(need) + " items but only " +
                                    std::to_string(count) + " are available");
    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(spec.split_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    SplitIndices out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(spec.train_count()));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(spec.train_count()),
                    perm.begin() + static_cast<std::ptrdiff_t>(need));
    return out;
}

SyntheticTrajectories synthesize_trajectories(std::size_t count, std::size_t P, const DopplerSpec& spec,
                                              std::size_t length, std::uint64_t seed) {
    if (length == 0) throw std::invalid_argument("synthesize_trajectories: length must be >= 1");
    SyntheticTrajectories out;
    out.blocks.resize(idx(count), idx(length));
    out.paths.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        PathSet ps = sample_paths(P, spec, derive_seed(seed, {r}));
        const ChannelBlock block = synthesize_block(ps, length, 0, spec);
        out.blocks.row(idx(r)) = block.coeffs.transpose();
        out.paths.push_back(std::move(ps));
    }
    return out;
}

ChannelMatrix synthesize_ula_channels(std::size_t count, std::size_t M, const ClusterSpec& cluster,
                                      std::uint64_t seed) {
    if (M == 0 || cluster.subpaths == 0) throw std::invalid_argument("synthesize_ula_channels: M and subpaths must be >= 1");
    using std::numbers::pi;
    ChannelMatrix out = ChannelMatrix::Zero(idx(count), idx(M));
    const double spread = cluster.spread_deg * pi / 180.0;
    const double gain_sd = std::sqrt(0.5 / static_cast<double>(cluster.subpaths));
    for (std::size_t r = 0; r < count; ++r) {
        std::mt19937_64 rng(derive_seed(seed, {r}));
        std::uniform_real_distribution<double> center_dist(-pi / 2.0, pi / 2.0);
        std::uniform_real_distribution<double> offset_dist(-spread, spread);
        std::normal_distribution<double> gauss(0.0, gain_sd);
        const double center = center_dist(rng);
        for (std::size_t s = 0; s < cluster.subpaths; ++s) {
            const double theta = center + offset_dist(rng);
            const double re = gauss(rng);
            const double im = gauss(rng);
            const cd g{re, im};
            const double step = pi * std::sin(theta);
            for (std::size_t m = 0; m < M; ++m) out(idx(r), idx(m)) += g * std::polar(1.0, step * static_cast<double>(m));
        }
    }
    return out;
}

}  // namespace mmsechan
