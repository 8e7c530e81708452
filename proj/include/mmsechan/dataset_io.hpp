#pragma once

#include "mmsechan/binary_io.hpp"
#include "mmsechan/channel_model.hpp"
#include "mmsechan/linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmsechan {

// Channel file layout (all little-endian):
//   offset 0   magic "CHN1"
//   offset 4   u16 format version
//   offset 6   u32 count
//   offset 10  u32 dim
//   offset 14  count*dim complex samples, (f64 real, f64 imag), row-major
inline constexpr std::string_view kChannelMagic = "CHN1";
inline constexpr std::uint16_t kChannelFileVersion = 1;
inline constexpr std::size_t kChannelHeaderSize = 14;

std::string encode_channels(const ChannelMatrix& channels);
ChannelMatrix decode_channels(std::string_view bytes);

void save_channels(const std::string& path, const ChannelMatrix& channels);
ChannelMatrix load_channels(const std::string& path);

/// Global rescale so that the mean of ||h||^2 over rows equals target.
ChannelMatrix normalize(const ChannelMatrix& channels, double target);

/// Observation/target pair cut from a trajectory.
struct WindowItem {
    CVector obs;       // [h[s+M-1], ..., h[s]]
    cd target;         // h[s+M-1+l]
    std::size_t row = 0;
    std::size_t start = 0;
};

/// Groups of M+l consecutive coefficients starting every `stride` samples (0 means M+l,
/// i.e. disjoint groups). Trailing coefficients that do not fill a group are dropped.
std::vector<WindowItem> window_trajectory(const CVector& trajectory, std::size_t M, std::size_t l,
                                          std::size_t stride = 0);

/// A single-column matrix is one trajectory; otherwise every row is its own trajectory.
std::vector<WindowItem> window_channels(const ChannelMatrix& channels, std::size_t M, std::size_t l,
                                        std::size_t stride = 0);

struct SplitSpec {
    std::size_t train_batches = 0;
    std::size_t train_batch_size = 1;
    std::size_t test_batches = 0;
    std::size_t test_batch_size = 1;
    std::uint64_t split_seed = 0;

    std::size_t train_count() const noexcept { return train_batches * train_batch_size; }
    std::size_t test_count() const noexcept { return test_batches * test_batch_size; }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded permutation of [0, count); the first train_count() go to training, the next
/// test_count() to testing. Throws if count is insufficient.
SplitIndices split_indices(std::size_t count, const SplitSpec& spec);

/// Fixed-size batches over an owned item set; reshuffle permutes item (and thus batch) order.
template <class T>
class BatchStream {
public:
    BatchStream() = default;
    BatchStream(std::vector<T> items, std::size_t batch_size) : items_(std::move(items)), batch_size_(batch_size) {
        if (batch_size_ == 0) throw std::invalid_argument("BatchStream: batch size must be >= 1");
    }

    std::size_t size() const noexcept { return items_.size(); }
    std::size_t batch_size() const noexcept { return batch_size_; }
    std::size_t batch_count() const noexcept { return batch_size_ ? (items_.size() + batch_size_ - 1) / batch_size_ : 0; }
    const std::vector<T>& items() const noexcept { return items_; }

    std::span<const T> batch(std::size_t b) const {
        const std::size_t start = b * batch_size_;
        if (start >= items_.size()) throw std::out_of_range("BatchStream: batch index out of range");
        return std::span<const T>(items_).subspan(start, std::min(batch_size_, items_.size() - start));
    }

    void reshuffle(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::shuffle(items_.begin(), items_.end(), rng);
    }

private:
    std::vector<T> items_;
    std::size_t batch_size_ = 1;
};

template <class T>
std::pair<BatchStream<T>, BatchStream<T>> split_and_batch(const std::vector<T>& items, const SplitSpec& spec) {
    const SplitIndices idx = split_indices(items.size(), spec);
    std::vector<T> train, test;
    train.reserve(idx.train.size());
    test.reserve(idx.test.size());
    for (std::size_t i : idx.train) train.push_back(items[i]);
    for (std::size_t i : idx.test) test.push_back(items[i]);
    return {BatchStream<T>(std::move(train), spec.train_batch_size), BatchStream<T>(std::move(test), spec.test_batch_size)};
}

/// Synthetic trajectories: row r is one block of `length` coefficients drawn from its own
/// P-path set (seeded from `seed` and r).
struct SyntheticTrajectories {
    ChannelMatrix blocks;
    std::vector<PathSet> paths;
};

SyntheticTrajectories synthesize_trajectories(std::size_t count, std::size_t P, const DopplerSpec& spec,
                                              std::size_t length, std::uint64_t seed);

/// Single-cluster ULA channel: center angle uniform on [-pi/2, pi/2], `subpaths` rays with
/// offsets uniform within +-spread_deg and CN(0, 1/subpaths) gains, so E||h||^2 = M.
struct ClusterSpec {
    std::size_t subpaths = 20;
    double spread_deg = 2.0;
};

ChannelMatrix synthesize_ula_channels(std::size_t count, std::size_t M, const ClusterSpec& cluster,
                                      std::uint64_t seed);

}  // namespace mmsechan
