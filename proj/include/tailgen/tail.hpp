#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailgen/coupling.hpp"
#include "tailgen/flow.hpp"
#include "tailgen/matrix.hpp"
#include "tailgen/numerics.hpp"

namespace tailgen {

enum class TailArch { coupling, feed_forward, residual };
enum class TailInit { from_density, random };

struct TailConfig {
    long dim = 2;
    TailArch arch = TailArch::coupling;
    long hidden = 64;
    long num_layers = 3;    // coupling layers / linear layers / residual blocks
    double scale_cap = 4.0; // coupling only

    void validate() const;
};

/// The boundary-sample generator T(z). Three interchangeable architectures;
/// the coupling variant mirrors the flow's forward map so that initializing
/// from a trained density reproduces it exactly at step zero.
class TailNet {
public:
    static TailNet from_density(const FlowModel& density);
    static TailNet random_init(const TailConfig& cfg, std::uint64_t seed);

    long dim() const { return cfg_.dim; }
    TailArch arch() const { return cfg_.arch; }
    const TailConfig& config() const { return cfg_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    long param_count() const { return static_cast<long>(params_.size()); }

    std::vector<double> forward(std::span<const double> z) const;

    /// T applied to n fresh standard-normal draws, one per row.
    Matrix generate(long n, std::uint64_t seed) const;

    struct Work {
        CouplingStack::Work cw;        // coupling
        std::vector<double> acts;      // feed_forward / residual activation cache
        std::vector<double> states;    // residual block boundary states
        std::vector<double> z;         // cached input
        std::vector<double> scratch;   // 2 * max width
        std::vector<double> grad;      // dim
        std::vector<double> gu;        // dim
    };
    Work make_work() const;
    void forward_cached(std::span<const double> z, Work& w) const;
    std::span<const double> work_output(const Work& w) const;
    /// Accumulates d<g_x, T(z)>/dtheta into g_params.
    void backward(Work& w, std::span<const double> g_x, std::span<double> g_params) const;

private:
    TailNet(TailConfig cfg, std::vector<double> params);
    friend TailNet make_tail_from_parts(TailConfig cfg, std::vector<double> params);

    TailConfig cfg_;
    std::optional<CouplingStack> stack_;  // coupling
    std::optional<Mlp> mlp_;              // feed_forward whole net / residual block
    std::vector<double> params_;
};

/// Checkpoint loader hook: rebuild a TailNet from its stored config and params.
TailNet make_tail_from_parts(TailConfig cfg, std::vector<double> params);

TailNet init_tail(const FlowModel& density, TailInit mode, std::uint64_t seed,
                  const TailConfig& random_cfg = {});

/// Weights and shape parameters of the four-term objective
///   L_tot = w_pr L_pr + w_d L_d + w_e L_e + w_sc L_sc
/// evaluated over a latent batch of size N against a sample set of size M:
///   L_pr = (1/N) sum_i p(T(z_i))
///   L_d  = (1/N) sum_i min_j ||T(z_i) - x_j||_p
///   L_e  = (1/N) sum_i p(T(z_i)) log p(T(z_i))
///   L_sc = (1/N) sum_i (1/(N-1)) sum_{j != i} ||z_i - z_j||_p^q / ||T(z_i) - T(z_j)||_p^q
struct LossWeights {
    double w_pr = 1.0;  // held at 1; the other three are free hyperparameters
    double w_d = 0.05;
    double w_e = 0.05;
    double w_sc = 0.001;
    double p = 2.0;
    double q = 2.0;
    long n_batch = 256;  // N
    long m_sample = 0;   // M; 0 means every data row
    bool distance_to_generator = false;  // L_d against G(z) draws instead of data
    bool log_domain_pr = false;          // L_pr on log p instead of raw p
    // Training-time distance-reference trim: drop reference rows whose model
    // density falls below this quantile of the reference set (0 disables).
    // The distance term's local minima then all lie inside the support
    // boundary; otherwise the data's own sub-threshold outliers catch
    // generated samples on their way back to the shell and strand them in
    // the far tail. Reports and direct loss_terms calls never trim.
    double trim_quantile = 0.05;

    void validate() const;
};

struct LossTerms {
    double pr = 0.0;
    double d = 0.0;
    double e = 0.0;
    double sc = 0.0;
    double tot = 0.0;
};

/// Evaluate all loss terms. Pure given frozen inputs. L_sc reads only the
/// latents and T's parameters, never the data argument. Throws
/// ModeCollapseError when two latents map to exactly coincident outputs
/// (only detectable when w_sc != 0, which is when the term is computed).
LossTerms loss_terms(const TailNet& tail, const Matrix& z_batch, const Matrix& data,
                     const FlowModel& density, const LossWeights& w);

/// Same values plus the gradient with respect to T's parameters, accumulated
/// into g_theta. Density parameters are constants: gradients flow through T
/// only. The scattering denominator gets a 1e-12 cushion inside the norm for
/// the gradient only; an exactly zero distance still raises ModeCollapseError.
LossTerms loss_terms_grad(const TailNet& tail, const Matrix& z_batch, const Matrix& data,
                          const FlowModel& density, const LossWeights& w,
                          std::span<double> g_theta);

struct TailTrainConfig {
    double stop_rel_improvement = 1e-5;
    long stop_window = 100;
    // Training runs in three stages before the improvement stop can fire:
    //   1. warmup_epochs of regression onto the density's generator map
    //      (mean squared error on fresh latent draws). The main phase then
    //      starts from within the distribution whatever the architecture; a
    //      randomly initialized net otherwise covers only one component of a
    //      disjoint support and never recovers.
    //   2. anchor_epochs with the distance weight raised to anchor_w_d and
    //      the entropy/scattering terms off, contracting T's image onto the
    //      data manifold. Skipping this leaves samples stranded in local
    //      minima of the distance term around outlying data points.
    //   3. opt.max_epochs with the configured weights, floating the samples
    //      out to the density shell.
    long warmup_epochs = 0;
    long anchor_epochs = 0;
    double anchor_w_d = 1.0;
};

struct TailTrace {
    std::vector<LossTerms> per_epoch;  // entry 0 = before training, then one per epoch
    bool aborted = false;
    std::string abort_reason;
    long epochs_run = 0;
};

/// Gradient descent on theta with the density frozen. Each epoch trains on a
/// fresh latent batch and records the configured-weight loss on a fixed
/// evaluation batch, so the trace is deterministic given the optimizer seed.
/// opt.max_epochs counts the main phase; warmup epochs come on top. The net
/// is left at the parameters with the best main-phase L_tot.
TailTrace train_tail(TailNet& tail, const FlowModel& density, const Matrix& data,
                     const LossWeights& w, const OptimizerConfig& opt,
                     const TailTrainConfig& tc = {});

}  // namespace tailgen
