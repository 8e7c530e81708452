#include "mmsechan/bessel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmsechan {

namespace {

constexpr double kSeriesLimit = 12.0;

double j0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<double>(k) * k);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum) && std::abs(term) < 1e-17) break;
    }
    return sum;
}

// J0(x) = sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)], with
// |a_k| = prod_{j<=k} (2j-1)^2 / (k! 8^k) feeding P (even k) and Q (odd k);
// for order zero the term signs run +, -, -, + with period four.
double j0_hankel(double x) {
    double p = 0.0;
    double q = 0.0;
    double a = 1.0;
    double term = 1.0;
    double prev = INFINITY;
    for (int k = 0; k < 100; ++k) {
        if (k > 0) {
            a *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k);
            term = a / std::pow(x, k);
        }
        // asymptotic series: stop before the terms start to grow
        if (term > prev) break;
        prev = term;
        switch (k % 4) {
            case 0: p += term; break;
            case 1: q -= term; break;
            case 2: p -= term; break;
            case 3: q += term; break;
        }
        if (term < 1e-17) break;
    }
    const double s = std::sin(x);
    const double c = std::cos(x);
    // cos(x - pi/4) = (c + s)/sqrt2, sin(x - pi/4) = (s - c)/sqrt2
    const double cphase = (c + s) * (1.0 / std::numbers::sqrt2);
    const double sphase = (s - c) * (1.0 / std::numbers::sqrt2);
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cphase - q * sphase);
}

}  // namespace

double bessel_j0(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("bessel_j0: non-finite argument");
    const double ax = std::abs(x);
    return ax <= kSeriesLimit ? j0_series(ax) : j0_hankel(ax);
}

}  // namespace mmsechan
