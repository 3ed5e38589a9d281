#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tailgen/coupling.hpp"
#include "tailgen/matrix.hpp"
#include "tailgen/numerics.hpp"
#include "tailgen/rng.hpp"

namespace tailgen {

struct FlowConfig {
    long dim = 2;
    long num_layers = 6;
    long hidden = 64;
    double scale_cap = 4.0;

    void validate() const;
};

/// Invertible generator from a standard-normal latent to data space, with the
/// exact log-density available through the change of variables
///   log p(x) = log N(G^{-1}(x); 0, I) - log|det J_G(G^{-1}(x))|.
/// Evaluation (forward / inverse / log_density) is read-only and safe for
/// concurrent callers; fit_mle mutates parameters and needs exclusive access.
class FlowModel {
public:
    FlowModel(const FlowConfig& cfg, std::uint64_t init_seed);
    FlowModel(const FlowConfig& cfg, std::vector<double> params);

    long dim() const { return stack_.dim; }
    const FlowConfig& config() const { return cfg_; }
    const CouplingStack& stack() const { return stack_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::vector<double> forward(std::span<const double> z) const;
    std::vector<double> inverse(std::span<const double> x) const;
    double log_det_forward(std::span<const double> z) const;
    double log_density(std::span<const double> x) const;

    /// log p(x) plus its gradient with respect to x (written to dlogp_dx).
    double log_density_grad_x(std::span<const double> x, std::span<double> dlogp_dx) const;

    /// -log p(x) with its parameter gradient accumulated into g_params.
    double nll_param_grad(std::span<const double> x, std::span<double> g_params) const;

    Matrix sample(long n, std::uint64_t seed) const;
    void sample_row(Rng& rng, std::span<double> out) const;

private:
    FlowConfig cfg_;
    CouplingStack stack_;
    std::vector<double> params_;
};

struct FitResult {
    std::vector<double> nll_trace;  // entry 0 = before training, then one per epoch
    bool aborted = false;           // true when a NaN forced a rollback to the best state
    long epochs_run = 0;
};

/// Maximum-likelihood training: minimizes mean -log p over data with minibatch
/// gradient descent. The model is left at the best full-data NLL seen.
FitResult fit_mle(FlowModel& model, const Matrix& data, const OptimizerConfig& opt);

double mean_log_density(const FlowModel& model, const Matrix& data);

}  // namespace tailgen
