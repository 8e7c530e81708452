#pragma once

#include "mmsechan/linalg.hpp"

#include <vector>

namespace mmsechan {

/// M x D matrix of unit-norm atoms.
struct Dictionary {
    CMatrix atoms;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(atoms.rows()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(atoms.cols()); }

    /// Normalizes every column; throws on a zero column.
    static Dictionary from_columns(CMatrix columns);
};

/// Oversampled ULA steering dictionary: atom d has spatial frequency d / D (D = factor * M).
Dictionary steering_dictionary(std::size_t M, std::size_t oversampling = 4);

struct OmpResult {
    CVector reconstruction;
    std::vector<std::size_t> support;   // in selection order
    std::vector<double> residual_norms; // after each completed iteration
    /// Reconstruction after iteration i+1, for i < support.size().
    std::vector<CVector> path;
};

/// Orthogonal matching pursuit with s iterations (1 <= s <= M). Atom choice maximizes
/// |atom^H r| with ties to the lowest index; the coefficients are re-fit by least squares
/// over the full support each iteration. Stops early if the support becomes rank deficient.
OmpResult omp_path(const CVector& y, const Dictionary& dict, std::size_t s);

CVector omp(const CVector& y, const Dictionary& dict, std::size_t s);

struct GenieOmpResult {
    CVector reconstruction;
    std::size_t sparsity = 0;
    double squared_error = 0.0;
};

/// Runs OMP for s = 1..s_max and keeps the reconstruction closest to the true channel
/// (ties to the smallest s).
GenieOmpResult genie_omp(const CVector& y, const Dictionary& dict, const CVector& h_true, std::size_t s_max);

}  // namespace mmsechan
