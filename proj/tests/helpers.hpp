#pragma once

#include <cmath>
#include <vector>

#include "tailgen/flow.hpp"
#include "tailgen/matrix.hpp"
#include "tailgen/rng.hpp"

namespace tailgen::testing {

// Offset of the output-layer bias inside one coupling layer's parameter block:
// [W1 (h x d), b1 (h), W2 (2d x h), b2 (2d)].
inline long out_bias_offset(const CouplingStack& stack) {
    return stack.params_per_layer() - 2 * stack.dim;
}

// raw value whose bounded log-scale equals s: s = cap * tanh(raw / cap).
inline double raw_for_scale(double s, double cap) { return cap * std::atanh(s / cap); }

/// Single-layer flow whose first mask is (1, 0, 1, ...): coordinate 1 gets a
/// constant log-scale and shift, everything else passes through.
inline FlowModel constant_coupling_flow(long dim, double log_scale, double shift,
                                        std::uint64_t seed = 1) {
    FlowConfig cfg;
    cfg.dim = dim;
    cfg.num_layers = 1;
    cfg.hidden = 4;
    FlowModel m(cfg, seed);
    const long b2 = out_bias_offset(m.stack());
    m.params()[b2 + 1] = raw_for_scale(log_scale, cfg.scale_cap);          // s_raw for coord 1
    m.params()[b2 + dim + 1] = shift;                                      // t for coord 1
    return m;
}

/// Two-layer d=2 flow computing G(z) = scale * z exactly (each layer scales
/// the coordinate its mask leaves free).
inline FlowModel scaling_flow_2d(double scale, std::uint64_t seed = 1) {
    FlowConfig cfg;
    cfg.dim = 2;
    cfg.num_layers = 2;
    cfg.hidden = 4;
    FlowModel m(cfg, seed);
    const long per = m.stack().params_per_layer();
    const long b2 = out_bias_offset(m.stack());
    const double raw = raw_for_scale(std::log(scale), cfg.scale_cap);
    // Layer 0 mask (1,0): transforms coordinate 1. Layer 1 mask (0,1): coordinate 0.
    // The nets read only masked (pass-through) coordinates, but constant biases
    // have to be zeroed on masked slots anyway since only unmasked entries act.
    m.params()[0 * per + b2 + 1] = raw;
    m.params()[1 * per + b2 + 0] = raw;
    return m;
}

/// Identity-at-init flow with parameters jittered by a small seeded amount, so
/// the map is a generic smooth invertible function.
inline FlowModel perturbed_flow(const FlowConfig& cfg, double amount, std::uint64_t seed) {
    FlowModel m(cfg, seed);
    Rng rng(derive_seed(seed, "perturb"));
    for (double& p : m.params()) p += amount * rng.normal();
    return m;
}

inline Matrix gaussian_blob(long n, long dim, std::span<const double> center, double scale,
                            std::uint64_t seed) {
    Matrix m(n, dim);
    Rng rng(seed);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < dim; ++j) m[i][j] = center[j] + scale * rng.normal();
    }
    return m;
}

/// Midpoint-rule integral of exp(log_density) over [lo, hi]^2.
inline double grid_density_integral(const FlowModel& model, double lo, double hi, double step) {
    double sum = 0.0;
    const long n = static_cast<long>(std::llround((hi - lo) / step));
    for (long i = 0; i < n; ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * step;
        for (long j = 0; j < n; ++j) {
            const double y = lo + (static_cast<double>(j) + 0.5) * step;
            const double pt[2] = {x, y};
            sum += std::exp(model.log_density(pt));
        }
    }
    return sum * step * step;
}

/// Central-difference Jacobian determinant of the forward map (d = 2).
inline double numerical_forward_logdet_2d(const FlowModel& model, std::span<const double> z,
                                          double step = 1e-5) {
    double jac[2][2];
    for (long j = 0; j < 2; ++j) {
        std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
        zp[j] += step;
        zm[j] -= step;
        const auto fp = model.forward(zp);
        const auto fm = model.forward(zm);
        for (long i = 0; i < 2; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
    }
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    return std::log(std::abs(det));
}

inline bool close(double a, double b, double abs_tol, double rel_tol) {
    const double diff = std::abs(a - b);
    return diff <= abs_tol || diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace tailgen::testing
