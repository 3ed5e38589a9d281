#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tailgen/data.hpp"
#include "tailgen/flow.hpp"
#include "tailgen/numerics.hpp"
#include "tailgen/scoring.hpp"
#include "tailgen/tail.hpp"

namespace tailgen {

/// Every tunable of the pipeline under one flat key space with dotted section
/// names. Precedence: command-line overrides > config file > defaults. The
/// full effective state echoes back to disk so a run can be replayed exactly.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";

    std::string data_kind = "gaussian_mixture";
    long data_n = 3000;
    long data_dim = 2;
    std::string data_centers = "0,0;8,0;0,8";
    std::string data_scales = "0.7";
    std::string data_weights = "";  // empty = equal
    double data_holdout = 0.25;

    long flow_layers = 8;
    long flow_hidden = 64;
    double flow_scale_cap = 4.0;
    std::string flow_opt_method = "adam";
    double flow_opt_step_size = 1e-3;
    double flow_opt_beta1 = 0.9;
    double flow_opt_beta2 = 0.999;
    double flow_opt_eps = 1e-8;
    long flow_opt_max_epochs = 400;
    long flow_opt_batch_size = 256;

    std::string tail_arch = "coupling";
    std::string tail_init = "from_density";
    long tail_hidden = 64;
    long tail_layers = 3;
    std::string tail_opt_method = "adam";
    double tail_opt_step_size = 1e-3;
    double tail_opt_beta1 = 0.9;
    double tail_opt_beta2 = 0.999;
    double tail_opt_eps = 1e-8;
    long tail_opt_max_epochs = 1500;
    double tail_stop_rel_improvement = 1e-5;
    long tail_stop_window = 100;
    long tail_warmup_epochs = 0;
    long tail_anchor_epochs = 0;
    double tail_anchor_w_d = 1.0;

    double loss_w_pr = 1.0;
    double loss_w_d = 0.05;
    double loss_w_e = 0.05;
    double loss_w_sc = 0.001;
    double loss_p = 2.0;
    double loss_q = 2.0;
    long loss_n_batch = 256;
    long loss_m_sample = 0;
    std::string loss_distance_to = "data";  // data | generator
    double loss_trim_quantile = 0.05;
    bool loss_log_domain_pr = false;

    double score_alpha_density = 1.0;
    double score_alpha_distance = 0.01;
    double score_epsilon = 0.0;  // 0 = derive from the quantile rule
    double score_epsilon_quantile = 0.05;
    double score_p = 2.0;

    std::string cluster_floor = "all_pairs";  // all_pairs | shared_index

    // ---- file and override handling ----
    static RunConfig defaults() { return {}; }

    /// Parse `key = value` lines (# comments, blank lines allowed). Unknown
    /// keys raise ConfigError naming the key.
    static RunConfig from_file(const std::string& path);

    /// Apply one `key=value` override; unknown keys raise ConfigError.
    void set(const std::string& key, const std::string& value);

    /// All keys in registry order, ready to write back and replay.
    std::string echo() const;
    void write_echo(const std::string& path) const;

    // ---- typed views ----
    DistributionSpec data_spec() const;
    FlowConfig flow_config() const;
    OptimizerConfig flow_opt() const;
    TailConfig tail_config() const;
    TailInit tail_init_mode() const;
    OptimizerConfig tail_opt() const;
    TailTrainConfig tail_train_config() const;
    LossWeights loss_weights() const;
    ScoreConfig score_config() const;
    FloorRule floor_rule() const;

    void validate() const;
};

}  // namespace tailgen
