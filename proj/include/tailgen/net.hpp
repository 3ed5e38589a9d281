#pragma once

#include <algorithm>
#include <span>
#include <vector>

namespace tailgen {

/// Fully-connected stack with tanh hidden units and a linear output layer.
/// Parameters live in a caller-owned flat buffer: per layer, the weight matrix
/// (row-major, out x in) followed by the bias vector.
struct Mlp {
    std::vector<long> sizes;   // {in, hidden..., out}
    std::vector<long> p_offs;  // parameter block offset per layer
    std::vector<long> a_offs;  // activation block offset per layer

    explicit Mlp(std::vector<long> layer_sizes) : sizes(std::move(layer_sizes)) {
        long p = 0, a = 0;
        for (long l = 0; l < depth(); ++l) {
            p_offs.push_back(p);
            a_offs.push_back(a);
            p += sizes[l] * sizes[l + 1] + sizes[l + 1];
            a += sizes[l + 1];
        }
        total_params_ = p;
        total_acts_ = a;
    }

    long depth() const { return static_cast<long>(sizes.size()) - 1; }
    long param_count() const { return total_params_; }

    /// Total length of the activation cache written by forward (one block per layer).
    long act_count() const { return total_acts_; }

    long max_width() const { return *std::max_element(sizes.begin(), sizes.end()); }

    /// Evaluate the network; acts receives every layer's post-activation output,
    /// the final block being the network output.
    void forward(const double* params, const double* x, double* acts) const;

    /// Reverse-mode pass. g_out is the cotangent on the network output.
    /// Parameter gradients are accumulated into g_params when non-null; the
    /// input gradient is written (overwritten) into g_x when non-null.
    /// scratch must hold at least 2 * max_width() doubles.
    void backward(const double* params, const double* x, const double* acts, const double* g_out,
                  double* g_params, double* g_x, double* scratch) const;

private:
    long total_params_ = 0;
    long total_acts_ = 0;
};

}  // namespace tailgen
