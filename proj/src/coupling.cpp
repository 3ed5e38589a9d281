#include "tailgen/coupling.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "tailgen/errors.hpp"
#include "tailgen/rng.hpp"

namespace tailgen {

namespace {
inline double bounded_scale(double raw, double cap) { return cap * std::tanh(raw / cap); }
// d(bounded_scale)/d(raw) expressed through s itself: 1 - tanh^2 = 1 - (s/cap)^2.
inline double bounded_scale_deriv(double s, double cap) {
    const double t = s / cap;
    return 1.0 - t * t;
}
}  // namespace

CouplingStack::CouplingStack(long d, long layers, long hidden_width, double cap)
    : dim(d), num_layers(layers), hidden(hidden_width), scale_cap(cap),
      net({d, hidden_width, 2 * d}) {
    if (d < 2) throw InputError("coupling: dim must be >= 2 (a coupling layer needs a split)");
    if (layers < 1) throw InputError("coupling: need at least one layer");
    if (hidden_width < 1) throw InputError("coupling: hidden width must be >= 1");
    if (!(cap > 0.0)) throw InputError("coupling: scale cap must be > 0");
    masks.resize(static_cast<std::size_t>(layers) * d);
    for (long k = 0; k < layers; ++k) {
        for (long j = 0; j < d; ++j) masks[k * d + j] = static_cast<std::uint8_t>((j + k) % 2 == 0);
    }
}

void CouplingStack::init_identity(std::span<double> params, std::uint64_t seed) const {
    if (static_cast<long>(params.size()) != total_params()) {
        throw InputError("coupling init: parameter buffer size mismatch");
    }
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (long k = 0; k < num_layers; ++k) {
        double* p = params.data() + k * params_per_layer();
        // First linear layer: small uniform weights, zero bias.
        const long w1 = hidden * dim;
        for (long i = 0; i < w1; ++i) p[i] = rng.uniform(-bound, bound);
        for (long i = w1; i < w1 + hidden; ++i) p[i] = 0.0;
        // Output layer all zero -> s = t = 0 -> exact identity.
        const long rest = params_per_layer() - (w1 + hidden);
        std::memset(p + w1 + hidden, 0, sizeof(double) * rest);
    }
}

CouplingStack::Work CouplingStack::make_work() const {
    Work w;
    w.states.resize(static_cast<std::size_t>(num_layers + 1) * dim);
    w.acts.resize(static_cast<std::size_t>(num_layers) * net.act_count());
    w.u.resize(dim);
    w.gnet.resize(2 * dim);
    w.gu.resize(dim);
    w.scratch.resize(2 * net.max_width());
    w.grad.resize(dim);
    return w;
}

std::span<const double> CouplingStack::work_output(const Work& w) const {
    return {w.states.data() + static_cast<std::size_t>(num_layers) * dim,
            static_cast<std::size_t>(dim)};
}

void CouplingStack::forward_cached(std::span<const double> params, std::span<const double> z,
                                   Work& w) const {
    std::memcpy(w.states.data(), z.data(), sizeof(double) * dim);
    for (long k = 0; k < num_layers; ++k) {
        const double* in = w.states.data() + k * dim;
        double* out = w.states.data() + (k + 1) * dim;
        const std::uint8_t* mk = mask(k);
        for (long j = 0; j < dim; ++j) w.u[j] = mk[j] ? in[j] : 0.0;
        double* acts = w.acts.data() + k * net.act_count();
        net.forward(params.data() + k * params_per_layer(), w.u.data(), acts);
        const double* raw = acts + net.act_count() - 2 * dim;
        for (long j = 0; j < dim; ++j) {
            if (mk[j]) {
                out[j] = in[j];
            } else {
                const double s = bounded_scale(raw[j], scale_cap);
                out[j] = in[j] * std::exp(s) + raw[dim + j];
            }
        }
    }
}

void CouplingStack::forward(std::span<const double> params, std::span<const double> z,
                            std::span<double> x, double* log_det) const {
    thread_local Work w;
    if (w.states.size() != static_cast<std::size_t>(num_layers + 1) * dim ||
        w.acts.size() != static_cast<std::size_t>(num_layers) * net.act_count()) {
        w = make_work();
    }
    forward_cached(params, z, w);
    std::memcpy(x.data(), w.states.data() + num_layers * dim, sizeof(double) * dim);
    if (log_det != nullptr) {
        double ld = 0.0;
        for (long k = 0; k < num_layers; ++k) {
            const double* raw = w.acts.data() + k * net.act_count() + net.act_count() - 2 * dim;
            const std::uint8_t* mk = mask(k);
            for (long j = 0; j < dim; ++j) {
                if (!mk[j]) ld += bounded_scale(raw[j], scale_cap);
            }
        }
        *log_det = ld;
    }
}

void CouplingStack::forward_backward(std::span<const double> params, Work& w,
                                     std::span<const double> g_x, std::span<double> g_params,
                                     std::span<double> g_in) const {
    double* g = w.grad.data();
    std::memcpy(g, g_x.data(), sizeof(double) * dim);
    for (long k = num_layers - 1; k >= 0; --k) {
        const double* in = w.states.data() + k * dim;
        const double* acts = w.acts.data() + k * net.act_count();
        const double* raw = acts + net.act_count() - 2 * dim;
        const std::uint8_t* mk = mask(k);
        for (long j = 0; j < dim; ++j) w.u[j] = mk[j] ? in[j] : 0.0;

        std::memset(w.gnet.data(), 0, sizeof(double) * 2 * dim);
        for (long j = 0; j < dim; ++j) {
            if (mk[j]) continue;
            const double s = bounded_scale(raw[j], scale_cap);
            const double es = std::exp(s);
            // x_j = in_j * e^s + t_j
            w.gnet[j] = g[j] * in[j] * es * bounded_scale_deriv(s, scale_cap);
            w.gnet[dim + j] = g[j];
            g[j] *= es;
        }
        net.backward(params.data() + k * params_per_layer(), w.u.data(), acts, w.gnet.data(),
                     g_params.data() + k * params_per_layer(), w.gu.data(), w.scratch.data());
        for (long j = 0; j < dim; ++j) {
            if (mk[j]) g[j] += w.gu[j];
        }
    }
    if (!g_in.empty()) {
        for (long j = 0; j < dim; ++j) g_in[j] += g[j];
    }
}

void CouplingStack::inverse_cached(std::span<const double> params, std::span<const double> x,
                                   Work& w, double& log_det) const {
    std::memcpy(w.states.data(), x.data(), sizeof(double) * dim);
    double ld = 0.0;
    // Computation step t undoes layer k = num_layers - 1 - t.
    for (long t = 0; t < num_layers; ++t) {
        const long k = num_layers - 1 - t;
        const double* in = w.states.data() + t * dim;
        double* out = w.states.data() + (t + 1) * dim;
        const std::uint8_t* mk = mask(k);
        for (long j = 0; j < dim; ++j) w.u[j] = mk[j] ? in[j] : 0.0;
        double* acts = w.acts.data() + t * net.act_count();
        net.forward(params.data() + k * params_per_layer(), w.u.data(), acts);
        const double* raw = acts + net.act_count() - 2 * dim;
        for (long j = 0; j < dim; ++j) {
            if (mk[j]) {
                out[j] = in[j];
            } else {
                const double s = bounded_scale(raw[j], scale_cap);
                out[j] = (in[j] - raw[dim + j]) * std::exp(-s);
                ld += s;
            }
            if (!std::isfinite(out[j])) {
                throw NumericError("inverse: non-finite value at layer " + std::to_string(k));
            }
        }
    }
    log_det = ld;
}

void CouplingStack::inverse(std::span<const double> params, std::span<const double> x,
                            std::span<double> z, double* log_det) const {
    thread_local Work w;
    if (w.states.size() != static_cast<std::size_t>(num_layers + 1) * dim ||
        w.acts.size() != static_cast<std::size_t>(num_layers) * net.act_count()) {
        w = make_work();
    }
    double ld = 0.0;
    inverse_cached(params, x, w, ld);
    std::memcpy(z.data(), w.states.data() + num_layers * dim, sizeof(double) * dim);
    if (log_det != nullptr) *log_det = ld;
}

void CouplingStack::inverse_backward(std::span<const double> params, Work& w,
                                     std::span<const double> g_z, double g_ld,
                                     std::span<double> g_params, std::span<double> g_x) const {
    double* g = w.grad.data();
    std::memcpy(g, g_z.data(), sizeof(double) * dim);
    // Walk computation steps t = num_layers-1 .. 0 (layer k = num_layers-1-t).
    for (long t = num_layers - 1; t >= 0; --t) {
        const long k = num_layers - 1 - t;
        const double* in = w.states.data() + t * dim;
        const double* out = w.states.data() + (t + 1) * dim;
        const double* acts = w.acts.data() + t * net.act_count();
        const double* raw = acts + net.act_count() - 2 * dim;
        const std::uint8_t* mk = mask(k);
        for (long j = 0; j < dim; ++j) w.u[j] = mk[j] ? in[j] : 0.0;

        std::memset(w.gnet.data(), 0, sizeof(double) * 2 * dim);
        for (long j = 0; j < dim; ++j) {
            if (mk[j]) continue;
            const double s = bounded_scale(raw[j], scale_cap);
            const double ems = std::exp(-s);
            // out_j = (in_j - t_j) e^{-s}; log-det collects +s per unmasked coord.
            const double g_s = g[j] * (-out[j]) + g_ld;
            w.gnet[j] = g_s * bounded_scale_deriv(s, scale_cap);
            w.gnet[dim + j] = -g[j] * ems;
            g[j] *= ems;
        }
        double* gp = g_params.empty() ? nullptr : g_params.data() + k * params_per_layer();
        net.backward(params.data() + k * params_per_layer(), w.u.data(), acts, w.gnet.data(), gp,
                     w.gu.data(), w.scratch.data());
        for (long j = 0; j < dim; ++j) {
            if (mk[j]) g[j] += w.gu[j];
        }
    }
    if (!g_x.empty()) {
        for (long j = 0; j < dim; ++j) g_x[j] += g[j];
    }
}

}  // namespace tailgen
