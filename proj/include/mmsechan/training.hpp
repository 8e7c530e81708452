#pragma once

#include "mmsechan/adam.hpp"
#include "mmsechan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmsechan {

struct TrainConfig {
    std::size_t batch_size = 50;
    std::size_t epochs = 20;
    AdamConfig adam;
    std::uint64_t seed = 0;
    /// Stop early once the relative change of the training loss stays below this for
    /// `plateau_window` consecutive epochs. Zero disables the plateau stop.
    double plateau_tol = 1e-5;
    std::size_t plateau_window = 3;
};

struct TrainTrace {
    /// Full training-set loss: entry 0 at initialization, entry e after epoch e.
    std::vector<double> losses;
    std::size_t best_epoch = 0;
};

namespace detail {

/// Minibatch Adam over a flat parameter vector. Each epoch reshuffles the sample order from
/// the seeded generator; the returned vector is the best full-set iterate seen (the
/// initialization included), so the final training loss never exceeds the initial one.
template <class Sample, class LossFn, class GradFn>
RVector train_flat(RVector theta, std::span<const Sample> data, const TrainConfig& cfg, LossFn&& loss_fn,
                   GradFn&& grad_fn, TrainTrace& trace) {
    if (cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");
    trace.losses.clear();
    trace.best_epoch = 0;
    if (data.empty()) {
        trace.losses.push_back(0.0);
        return theta;
    }
    double best_loss = loss_fn(theta, data);
    trace.losses.push_back(best_loss);
    RVector best = theta;
    if (cfg.epochs == 0) return theta;

    Adam adam(cfg.adam, theta.size());
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Sample> batch;
    batch.reserve(cfg.batch_size);
    std::size_t flat_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
            const RVector g = grad_fn(theta, std::span<const Sample>(batch));
            adam.step(theta, g);
            if (!theta.allFinite()) throw std::runtime_error("train: parameters became non-finite");
        }
        const double current = loss_fn(theta, data);
        const double previous = trace.losses.back();
        trace.losses.push_back(current);
        if (current < best_loss) {
            best_loss = current;
            best = theta;
            trace.best_epoch = epoch;
        }
        if (cfg.plateau_tol > 0.0) {
            const double rel = std::abs(previous - current) / std::max(std::abs(previous), 1e-300);
            flat_epochs = rel < cfg.plateau_tol ? flat_epochs + 1 : 0;
            if (flat_epochs >= cfg.plateau_window) break;
        }
    }
    return best;
}

}  // namespace detail

}  // namespace mmsechan
