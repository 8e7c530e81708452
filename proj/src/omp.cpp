#include "mmsechan/omp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmsechan {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

Dictionary Dictionary::from_columns(CMatrix columns) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        const double n = columns.col(c).norm();
        if (n == 0.0) throw std::invalid_argument("Dictionary: zero atom at column " + std::to_string(c));
        columns.col(c) /= n;
    }
    return Dictionary{std::move(columns)};
}

Dictionary steering_dictionary(std::size_t M, std::size_t oversampling) {
    if (M == 0 || oversampling == 0) throw std::invalid_argument("steering_dictionary: M and oversampling must be >= 1");
    const std::size_t D = oversampling * M;
    CMatrix atoms(idx(M), idx(D));
    const double scale = 1.0 / std::sqrt(static_cast<double>(M));
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t m = 0; m < M; ++m) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((d * m) % D) / static_cast<double>(D);
            atoms(idx(m), idx(d)) = std::polar(scale, phase);
        }
    return Dictionary{std::move(atoms)};
}

OmpResult omp_path(const CVector& y, const Dictionary& dict, std::size_t s) {
    if (s == 0) throw std::invalid_argument("omp: sparsity must be >= 1");
    if (s > dict.dim()) throw std::invalid_argument("omp: sparsity must not exceed M");
    if (y.size() != dict.atoms.rows()) throw std::invalid_argument("omp: observation length mismatch");

    OmpResult res;
    res.reconstruction = CVector::Zero(y.size());
    CVector residual = y;
    std::vector<bool> used(dict.size(), false);

    for (std::size_t it = 0; it < s; ++it) {
        const CVector corr = dict.atoms.adjoint() * residual;
        std::size_t best = dict.size();
        double best_mag = -1.0;
        for (std::size_t d = 0; d < dict.size(); ++d) {
            if (used[d]) continue;
            const double mag = std::abs(corr(idx(d)));
            if (mag > best_mag) {
                best_mag = mag;
                best = d;
            }
        }
        if (best == dict.size()) break;

        CMatrix sub(y.size(), idx(res.support.size() + 1));
        for (std::size_t j = 0; j < res.support.size(); ++j) sub.col(idx(j)) = dict.atoms.col(idx(res.support[j]));
        sub.col(sub.cols() - 1) = dict.atoms.col(idx(best));
        Eigen::ColPivHouseholderQR<CMatrix> qr(sub);
        if (qr.rank() < sub.cols()) break;

        used[best] = true;
        res.support.push_back(best);
        const CVector coeffs = qr.solve(y);
        res.reconstruction = sub * coeffs;
        residual = y - res.reconstruction;
        res.residual_norms.push_back(residual.norm());
        res.path.push_back(res.reconstruction);
    }
    return res;
}

CVector omp(const CVector& y, const Dictionary& dict, std::size_t s) { return omp_path(y, dict, s).reconstruction; }

GenieOmpResult genie_omp(const CVector& y, const Dictionary& dict, const CVector& h_true, std::size_t s_max) {
    if (h_true.size() != y.size()) throw std::invalid_argument("genie_omp: true channel length mismatch");
    const OmpResult run = omp_path(y, dict, s_max);
    GenieOmpResult best;
    best.squared_error = INFINITY;
    for (std::size_t i = 0; i < run.path.size(); ++i) {
        const double err = (h_true - run.path[i]).squaredNorm();
        if (err < best.squared_error) {
            best.squared_error = err;
            best.sparsity = i + 1;
            best.reconstruction = run.path[i];
        }
    }
    if (run.path.empty()) {
        best.reconstruction = CVector::Zero(y.size());
        best.squared_error = h_true.squaredNorm();
    }
    return best;
}

}  // namespace mmsechan
