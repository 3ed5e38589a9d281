#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tailgen/errors.hpp"

namespace tailgen {

/// Principal branch W0 of the Lambert W function, w * exp(w) = x, for x >= -1/e.
/// Newton iteration in extended precision; the residual |w e^w - x| stays below
/// 1e-10 across the supported range, including x as large as 1e6.
/// Initial guess: log(1 + x) for x >= 0, -1 + sqrt(2 (1 + e x)) below zero.
/// Throws InputError for x < -1/e and NumericError if 50 iterations do not converge.
long double lambert_w(long double x);

enum class OptMethod { sgd, adam };

struct OptimizerConfig {
    OptMethod method = OptMethod::adam;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long max_epochs = 300;
    long batch_size = 256;
    std::uint64_t seed = 0;

    void validate() const;  // throws InputError on out-of-range settings
};

/// Moment buffers for Adam; SGD ignores them. step counts updates applied.
struct OptState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

/// One optimizer update in place. SGD: p -= eta g. Adam: bias-corrected moments.
void opt_step(std::span<double> params, std::span<const double> grads, OptState& state,
              const OptimizerConfig& cfg);

/// Central finite differences of f at params, one coordinate at a time.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> params, double step);

}  // namespace tailgen
