#pragma once

#include "mmsechan/binary_io.hpp"
#include "mmsechan/cnn_estimator.hpp"
#include "mmsechan/nn_predictor.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace mmsechan {

// Trained-parameter snapshot (all little-endian):
//   offset 0   magic "MMSP"
//   offset 4   u16 format version
//   offset 6   u16 type tag (1 = NN predictor, 2 = CNN estimator)
//   offset 8   u32 M, u32 K, u32 N_grid
//   offset 20  parameter blocks as f64, matrices row-major
// NN blocks: A1 (N_grid x K), b1 (N_grid), A2 (2M x N_grid), b2 (2M).
// CNN blocks: a1, a2, b1, b2 (K each); N_grid is stored as K.
inline constexpr std::string_view kSnapshotMagic = "MMSP";
inline constexpr std::uint16_t kSnapshotVersion = 1;

enum class SnapshotType : std::uint16_t { NNPredictor = 1, CNNEstimator = 2 };

std::string encode_snapshot(const NNParams& p);
std::string encode_snapshot(const CNNParams& p, std::size_t M);

NNParams decode_nn_snapshot(std::string_view bytes);
/// Returns the parameters; M is written to `M_out` when non-null.
CNNParams decode_cnn_snapshot(std::string_view bytes, std::size_t* M_out = nullptr);

void save_snapshot(const std::string& path, const NNParams& p);
void save_snapshot(const std::string& path, const CNNParams& p, std::size_t M);
NNParams load_nn_snapshot(const std::string& path);
CNNParams load_cnn_snapshot(const std::string& path, std::size_t* M_out = nullptr);

}  // namespace mmsechan
