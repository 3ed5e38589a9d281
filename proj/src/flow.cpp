#include "tailgen/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tailgen {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

void FlowConfig::validate() const {
    if (dim < 2) throw InputError("flow: dim must be >= 2 (coupling needs a split)");
    if (num_layers < 1) throw InputError("flow: num_layers must be >= 1");
    if (hidden < 1) throw InputError("flow: hidden must be >= 1");
    if (!(scale_cap > 0.0)) throw InputError("flow: scale_cap must be > 0");
}

FlowModel::FlowModel(const FlowConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), stack_(cfg.dim, cfg.num_layers, cfg.hidden, cfg.scale_cap) {
    cfg_.validate();
    params_.assign(stack_.total_params(), 0.0);
    stack_.init_identity(params_, init_seed);
}

FlowModel::FlowModel(const FlowConfig& cfg, std::vector<double> params)
    : cfg_(cfg), stack_(cfg.dim, cfg.num_layers, cfg.hidden, cfg.scale_cap),
      params_(std::move(params)) {
    cfg_.validate();
    if (static_cast<long>(params_.size()) != stack_.total_params()) {
        throw InputError("flow: parameter vector size mismatch");
    }
}

std::vector<double> FlowModel::forward(std::span<const double> z) const {
    require_dim(z, dim(), "forward input");
    require_finite(z, "forward input");
    std::vector<double> x(dim());
    stack_.forward(params_, z, x, nullptr);
    return x;
}

std::vector<double> FlowModel::inverse(std::span<const double> x) const {
    require_dim(x, dim(), "inverse input");
    require_finite(x, "inverse input");
    std::vector<double> z(dim());
    stack_.inverse(params_, x, z, nullptr);
    return z;
}

double FlowModel::log_det_forward(std::span<const double> z) const {
    require_dim(z, dim(), "log_det input");
    std::vector<double> x(dim());
    double ld = 0.0;
    stack_.forward(params_, z, x, &ld);
    return ld;
}

double FlowModel::log_density(std::span<const double> x) const {
    require_dim(x, dim(), "log_density input");
    require_finite(x, "log_density input");
    std::vector<double> z(dim());
    double ld = 0.0;
    stack_.inverse(params_, x, z, &ld);
    double logp = -0.5 * dim() * kLogTwoPi - ld;
    for (long j = 0; j < dim(); ++j) logp -= 0.5 * z[j] * z[j];
    return logp;
}

namespace {
CouplingStack::Work& local_work(const CouplingStack& stack) {
    thread_local CouplingStack::Work w;
    if (w.states.size() != static_cast<std::size_t>(stack.num_layers + 1) * stack.dim ||
        w.acts.size() != static_cast<std::size_t>(stack.num_layers) * stack.net.act_count()) {
        w = stack.make_work();
    }
    return w;
}
}  // namespace

double FlowModel::log_density_grad_x(std::span<const double> x, std::span<double> dlogp_dx) const {
    require_dim(x, dim(), "log_density input");
    CouplingStack::Work& w = local_work(stack_);
    double ld = 0.0;
    stack_.inverse_cached(params_, x, w, ld);
    std::span<const double> z = stack_.work_output(w);
    double logp = -0.5 * dim() * kLogTwoPi - ld;
    for (long j = 0; j < dim(); ++j) logp -= 0.5 * z[j] * z[j];

    // nll = 0.5||z||^2 + const + log_det; dlogp/dx = -dnll/dx.
    thread_local std::vector<double> g_z;
    g_z.assign(z.begin(), z.end());
    std::fill(dlogp_dx.begin(), dlogp_dx.end(), 0.0);
    stack_.inverse_backward(params_, w, g_z, 1.0, {}, dlogp_dx);
    for (long j = 0; j < dim(); ++j) dlogp_dx[j] = -dlogp_dx[j];
    return logp;
}

double FlowModel::nll_param_grad(std::span<const double> x, std::span<double> g_params) const {
    require_dim(x, dim(), "nll input");
    CouplingStack::Work& w = local_work(stack_);
    double ld = 0.0;
    stack_.inverse_cached(params_, x, w, ld);
    std::span<const double> z = stack_.work_output(w);
    double nll = 0.5 * dim() * kLogTwoPi + ld;
    for (long j = 0; j < dim(); ++j) nll += 0.5 * z[j] * z[j];

    thread_local std::vector<double> g_z;
    g_z.assign(z.begin(), z.end());
    stack_.inverse_backward(params_, w, g_z, 1.0, g_params, {});
    return nll;
}

Matrix FlowModel::sample(long n, std::uint64_t seed) const {
    if (n < 0) throw InputError("sample: n must be >= 0");
    Matrix out(n, dim());
    Rng rng(seed);
    for (long i = 0; i < n; ++i) sample_row(rng, out.row(i));
    return out;
}

void FlowModel::sample_row(Rng& rng, std::span<double> out) const {
    std::vector<double> z(dim());
    for (long j = 0; j < dim(); ++j) z[j] = rng.normal();
    stack_.forward(params_, z, out, nullptr);
}

double mean_log_density(const FlowModel& model, const Matrix& data) {
    double acc = 0.0;
    for (long i = 0; i < data.rows; ++i) acc += model.log_density(data.row(i));
    return acc / static_cast<double>(data.rows);
}

FitResult fit_mle(FlowModel& model, const Matrix& data, const OptimizerConfig& opt) {
    opt.validate();
    if (data.rows < 1) throw InputError("fit_mle: data is empty");
    if (data.cols != model.dim()) throw InputError("fit_mle: data width does not match model dim");
    require_finite({data.data.data(), data.data.size()}, "fit_mle data");

    FitResult result;
    const long n = data.rows;
    const long batch = std::min<long>(opt.batch_size, n);
    std::vector<double>& params = model.params();
    std::vector<double> grad(params.size(), 0.0);
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);

    Rng shuffle_rng(derive_seed(opt.seed, "fit_mle.shuffle"));
    OptState state;

    double best_nll;
    try {
        best_nll = -mean_log_density(model, data);
    } catch (const NumericError&) {
        best_nll = std::numeric_limits<double>::infinity();
    }
    std::vector<double> best_params = params;
    result.nll_trace.push_back(best_nll);

    for (long epoch = 0; epoch < opt.max_epochs; ++epoch) {
        for (long i = n - 1; i > 0; --i) {
            const long j = static_cast<long>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }
        bool nan_hit = false;
        for (long start = 0; start < n; start += batch) {
            const long stop = std::min(n, start + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_nll = 0.0;
            try {
                for (long b = start; b < stop; ++b) {
                    batch_nll += model.nll_param_grad(data.row(order[b]), grad);
                }
                if (!std::isfinite(batch_nll)) {
                    nan_hit = true;
                    break;
                }
                const double inv = 1.0 / static_cast<double>(stop - start);
                for (double& g : grad) g *= inv;
                opt_step(params, grad, state, opt);
            } catch (const NumericError&) {
                nan_hit = true;
                break;
            }
        }
        if (nan_hit) {
            params = best_params;
            result.aborted = true;
            break;
        }
        double epoch_nll;
        try {
            epoch_nll = -mean_log_density(model, data);
        } catch (const NumericError&) {
            epoch_nll = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(epoch_nll)) {
            params = best_params;
            result.aborted = true;
            break;
        }
        result.nll_trace.push_back(epoch_nll);
        if (epoch_nll < best_nll) {
            best_nll = epoch_nll;
            best_params = params;
        }
        result.epochs_run = epoch + 1;
    }
    params = best_params;
    return result;
}

}  // namespace tailgen
