#include "tailgen/numerics.hpp"

#include <cmath>
#include <string>

namespace tailgen {

long double lambert_w(long double x) {
    const long double branch_point = -std::exp(-1.0L);
    if (std::isnan(static_cast<double>(x)) || x < branch_point) {
        throw InputError("lambert_w: argument " + std::to_string(static_cast<double>(x)) +
                         " is below -1/e");
    }
    if (x == 0.0L) return 0.0L;

    long double w;
    if (x >= 0.0L) {
        w = std::log1p(x);
    } else {
        // Square-root expansion around the branch point keeps Newton in basin.
        long double p = std::sqrt(2.0L * (1.0L + std::exp(1.0L) * x));
        w = -1.0L + p;
    }

    for (int iter = 0; iter < 50; ++iter) {
        const long double ew = std::exp(w);
        const long double f = w * ew - x;
        if (std::abs(f) < 1e-13L * (1.0L + std::abs(x))) {
            // One more polish step, then done.
            const long double denom = ew * (1.0L + w);
            if (denom != 0.0L) w -= f / denom;
            return w;
        }
        long double denom = ew * (1.0L + w);
        if (denom == 0.0L) denom = 1e-300L;
        long double next = w - f / denom;
        if (next < -1.0L) next = -1.0L + (w + 1.0L) * 0.5L;  // stay on the W0 side
        w = next;
    }
    const long double residual = w * std::exp(w) - x;
    throw NumericError("lambert_w: Newton failed to converge, residual " +
                       std::to_string(static_cast<double>(residual)));
}

void OptimizerConfig::validate() const {
    if (!(step_size > 0.0)) throw InputError("optimizer: step_size must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InputError("optimizer: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InputError("optimizer: beta2 must be in [0, 1)");
    if (batch_size < 1) throw InputError("optimizer: batch_size must be >= 1");
    if (max_epochs < 0) throw InputError("optimizer: max_epochs must be >= 0");
}

void opt_step(std::span<double> params, std::span<const double> grads, OptState& state,
              const OptimizerConfig& cfg) {
    if (params.size() != grads.size()) {
        throw InputError("opt_step: params/grads size mismatch (" + std::to_string(params.size()) +
                         " vs " + std::to_string(grads.size()) + ")");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw NumericError("opt_step: non-finite gradient");
    }
    if (cfg.method == OptMethod::sgd) {
        state.step += 1;
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.step_size * grads[i];
        return;
    }
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.step_size * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> params, double step) {
    if (!(step > 0.0)) throw InputError("finite_diff_grad: step must be > 0");
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> grad(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + step;
        const double fp = f(p);
        p[i] = saved - step;
        const double fm = f(p);
        p[i] = saved;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

}  // namespace tailgen
