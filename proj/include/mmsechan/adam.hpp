#pragma once

#include "mmsechan/linalg.hpp"

namespace mmsechan {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive moment estimation over a flat parameter vector.
class Adam {
public:
    Adam(const AdamConfig& cfg, Eigen::Index n);

    void step(RVector& params, const RVector& grad);
    long steps() const noexcept { return t_; }

private:
    AdamConfig cfg_;
    RVector m_;
    RVector v_;
    long t_ = 0;
};

}  // namespace mmsechan
