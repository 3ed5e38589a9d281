#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tailgen/net.hpp"

namespace tailgen {

/// Stack of affine coupling layers over R^d with alternating binary masks.
/// Layer k leaves masked coordinates untouched and maps each unmasked one as
///   forward:  x_j = z_j * exp(s_j) + t_j
///   inverse:  z_j = (x_j - t_j) * exp(-s_j)
/// where (s, t) come from a small tanh network reading only the masked half.
/// The log-scale is bounded: s = cap * tanh(raw / cap), so the map stays
/// invertible for any parameter values and the bound is part of the function.
/// The per-layer log-det of the forward map is exactly the sum of s over
/// unmasked coordinates.
struct CouplingStack {
    long dim;
    long num_layers;
    long hidden;
    double scale_cap;
    Mlp net;                          // dim -> hidden -> 2*dim (s_raw block, then t block)
    std::vector<std::uint8_t> masks;  // num_layers x dim, 1 = pass-through

    CouplingStack(long d, long layers, long hidden_width, double cap);

    long params_per_layer() const { return net.param_count(); }
    long total_params() const { return params_per_layer() * num_layers; }
    const std::uint8_t* mask(long k) const { return masks.data() + k * dim; }

    /// Identity map at start: first linear layer gets small seeded weights so
    /// gradients are non-zero, the output layer is zeroed so (s, t) = (0, 0).
    void init_identity(std::span<double> params, std::uint64_t seed) const;

    /// Scratch for cached passes and backprop over one point.
    struct Work {
        std::vector<double> states;   // (num_layers + 1) * dim, in computation order
        std::vector<double> acts;     // num_layers * net.act_count()
        std::vector<double> u;        // dim, masked net input
        std::vector<double> gnet;     // 2 * dim
        std::vector<double> gu;       // dim
        std::vector<double> scratch;  // 2 * net.max_width()
        std::vector<double> grad;     // dim, running state cotangent
    };
    Work make_work() const;

    // ---- forward direction (z -> x) ----
    void forward(std::span<const double> params, std::span<const double> z, std::span<double> x,
                 double* log_det) const;
    void forward_cached(std::span<const double> params, std::span<const double> z, Work& w) const;
    std::span<const double> work_output(const Work& w) const;
    /// Backprop through the cached forward; g_params accumulates, g_in optional.
    void forward_backward(std::span<const double> params, Work& w, std::span<const double> g_x,
                          std::span<double> g_params, std::span<double> g_in) const;

    // ---- inverse direction (x -> z), accumulating the forward log-det ----
    /// Throws NumericError naming the layer index if an intermediate is non-finite.
    void inverse(std::span<const double> params, std::span<const double> x, std::span<double> z,
                 double* log_det) const;
    void inverse_cached(std::span<const double> params, std::span<const double> x, Work& w,
                        double& log_det) const;
    /// Backprop through the cached inverse for a loss on (z, log_det):
    /// g_z is the cotangent on z, g_ld the scalar cotangent on the log-det.
    /// g_params and g_x accumulate when non-empty.
    void inverse_backward(std::span<const double> params, Work& w, std::span<const double> g_z,
                          double g_ld, std::span<double> g_params, std::span<double> g_x) const;
};

}  // namespace tailgen
