#include "mmsechan/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsechan {

Adam::Adam(const AdamConfig& cfg, Eigen::Index n) : cfg_(cfg), m_(RVector::Zero(n)), v_(RVector::Zero(n)) {
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("Adam: learning rate must be > 0");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
        throw std::invalid_argument("Adam: moment decays must lie in [0, 1)");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("Adam: epsilon must be > 0");
}

void Adam::step(RVector& params, const RVector& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam::step: size mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
}

}  // namespace mmsechan
