#include "tailgen/net.hpp"

#include <cmath>
#include <cstring>

namespace tailgen {

void Mlp::forward(const double* params, const double* x, double* acts) const {
    const double* in = x;
    const double* p = params;
    double* out = acts;
    const long L = depth();
    for (long l = 0; l < L; ++l) {
        const long nin = sizes[l];
        const long nout = sizes[l + 1];
        const double* W = p;
        const double* b = p + nin * nout;
        for (long j = 0; j < nout; ++j) {
            double acc = b[j];
            const double* wj = W + j * nin;
            for (long i = 0; i < nin; ++i) acc += wj[i] * in[i];
            out[j] = (l < L - 1) ? std::tanh(acc) : acc;
        }
        in = out;
        out += nout;
        p += nin * nout + nout;
    }
}

void Mlp::backward(const double* params, const double* x, const double* acts, const double* g_out,
                   double* g_params, double* g_x, double* scratch) const {
    const long L = depth();
    double* delta = scratch;
    double* delta_next = scratch + max_width();

    std::memcpy(delta, g_out, sizeof(double) * sizes[L]);
    for (long l = L - 1; l >= 0; --l) {
        const long nin = sizes[l];
        const long nout = sizes[l + 1];
        const double* W = params + p_offs[l];
        const double* a = acts + a_offs[l];
        const double* in = (l == 0) ? x : acts + a_offs[l - 1];

        if (l < L - 1) {
            // Stored activations are post-tanh; convert to pre-activation grads.
            for (long j = 0; j < nout; ++j) delta[j] *= (1.0 - a[j] * a[j]);
        }
        if (g_params != nullptr) {
            double* gW = g_params + p_offs[l];
            double* gb = gW + nin * nout;
            for (long j = 0; j < nout; ++j) {
                const double d = delta[j];
                gb[j] += d;
                double* gwj = gW + j * nin;
                for (long i = 0; i < nin; ++i) gwj[i] += d * in[i];
            }
        }
        if (l > 0 || g_x != nullptr) {
            for (long i = 0; i < nin; ++i) {
                double acc = 0.0;
                for (long j = 0; j < nout; ++j) acc += delta[j] * W[j * nin + i];
                delta_next[i] = acc;
            }
            if (l == 0) {
                std::memcpy(g_x, delta_next, sizeof(double) * nin);
            } else {
                std::swap(delta, delta_next);
            }
        }
    }
}

}  // namespace tailgen
