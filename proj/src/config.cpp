#include "tailgen/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace tailgen {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Field {
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
T parse_or_throw(const std::string& key, const std::string& value);

template <>
long parse_or_throw<long>(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad integer for key '" + key + "': '" + value + "'");
    }
}

template <>
double parse_or_throw<double>(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad number for key '" + key + "': '" + value + "'");
    }
}

template <>
std::uint64_t parse_or_throw<std::uint64_t>(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return static_cast<std::uint64_t>(v);
    } catch (...) {
        throw ConfigError("config: bad integer for key '" + key + "': '" + value + "'");
    }
}

template <>
bool parse_or_throw<bool>(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: bad boolean for key '" + key + "': '" + value + "'");
}

#define STR_FIELD(key_name, member)                                                  \
    {key_name, [](const RunConfig& c) { return c.member; },                          \
     [](RunConfig& c, const std::string& v) { c.member = v; }}
#define LONG_FIELD(key_name, member)                                                 \
    {key_name, [](const RunConfig& c) { return std::to_string(c.member); },          \
     [](RunConfig& c, const std::string& v) { c.member = parse_or_throw<long>(key_name, v); }}
#define U64_FIELD(key_name, member)                                                  \
    {key_name, [](const RunConfig& c) { return std::to_string(c.member); },          \
     [](RunConfig& c, const std::string& v) {                                        \
         c.member = parse_or_throw<std::uint64_t>(key_name, v);                      \
     }}
#define DBL_FIELD(key_name, member)                                                  \
    {key_name, [](const RunConfig& c) { return fmt17(c.member); },                   \
     [](RunConfig& c, const std::string& v) { c.member = parse_or_throw<double>(key_name, v); }}
#define BOOL_FIELD(key_name, member)                                                 \
    {key_name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
     [](RunConfig& c, const std::string& v) { c.member = parse_or_throw<bool>(key_name, v); }}

const std::vector<Field>& registry() {
    static const std::vector<Field> fields = {
        U64_FIELD("seed", seed),
        STR_FIELD("out_dir", out_dir),
        STR_FIELD("data.kind", data_kind),
        LONG_FIELD("data.n", data_n),
        LONG_FIELD("data.dim", data_dim),
        STR_FIELD("data.centers", data_centers),
        STR_FIELD("data.scales", data_scales),
        STR_FIELD("data.weights", data_weights),
        DBL_FIELD("data.holdout", data_holdout),
        LONG_FIELD("flow.layers", flow_layers),
        LONG_FIELD("flow.hidden", flow_hidden),
        DBL_FIELD("flow.scale_cap", flow_scale_cap),
        STR_FIELD("flow.opt.method", flow_opt_method),
        DBL_FIELD("flow.opt.step_size", flow_opt_step_size),
        DBL_FIELD("flow.opt.beta1", flow_opt_beta1),
        DBL_FIELD("flow.opt.beta2", flow_opt_beta2),
        DBL_FIELD("flow.opt.eps", flow_opt_eps),
        LONG_FIELD("flow.opt.max_epochs", flow_opt_max_epochs),
        LONG_FIELD("flow.opt.batch_size", flow_opt_batch_size),
        STR_FIELD("tail.arch", tail_arch),
        STR_FIELD("tail.init", tail_init),
        LONG_FIELD("tail.hidden", tail_hidden),
        LONG_FIELD("tail.layers", tail_layers),
        STR_FIELD("tail.opt.method", tail_opt_method),
        DBL_FIELD("tail.opt.step_size", tail_opt_step_size),
        DBL_FIELD("tail.opt.beta1", tail_opt_beta1),
        DBL_FIELD("tail.opt.beta2", tail_opt_beta2),
        DBL_FIELD("tail.opt.eps", tail_opt_eps),
        LONG_FIELD("tail.opt.max_epochs", tail_opt_max_epochs),
        DBL_FIELD("tail.stop_rel_improvement", tail_stop_rel_improvement),
        LONG_FIELD("tail.stop_window", tail_stop_window),
        LONG_FIELD("tail.warmup_epochs", tail_warmup_epochs),
        LONG_FIELD("tail.anchor_epochs", tail_anchor_epochs),
        DBL_FIELD("tail.anchor_w_d", tail_anchor_w_d),
        DBL_FIELD("loss.w_pr", loss_w_pr),
        DBL_FIELD("loss.w_d", loss_w_d),
        DBL_FIELD("loss.w_e", loss_w_e),
        DBL_FIELD("loss.w_sc", loss_w_sc),
        DBL_FIELD("loss.p", loss_p),
        DBL_FIELD("loss.q", loss_q),
        LONG_FIELD("loss.n_batch", loss_n_batch),
        LONG_FIELD("loss.m_sample", loss_m_sample),
        STR_FIELD("loss.distance_to", loss_distance_to),
        DBL_FIELD("loss.trim_quantile", loss_trim_quantile),
        BOOL_FIELD("loss.log_domain_pr", loss_log_domain_pr),
        DBL_FIELD("score.alpha_density", score_alpha_density),
        DBL_FIELD("score.alpha_distance", score_alpha_distance),
        DBL_FIELD("score.epsilon", score_epsilon),
        DBL_FIELD("score.epsilon_quantile", score_epsilon_quantile),
        DBL_FIELD("score.p", score_p),
        STR_FIELD("cluster.floor", cluster_floor),
    };
    return fields;
}

#undef STR_FIELD
#undef LONG_FIELD
#undef U64_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const Field& f : registry()) {
        if (key == f.key) {
            f.set(*this, value);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    RunConfig cfg;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

std::string RunConfig::echo() const {
    std::string out;
    for (const Field& f : registry()) {
        out += std::string(f.key) + " = " + f.get(*this) + "\n";
    }
    return out;
}

void RunConfig::write_echo(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw ConfigError("config: cannot write '" + path + "'");
    f << echo();
}

namespace {
std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}
}  // namespace

DistributionSpec RunConfig::data_spec() const {
    DistributionSpec spec;
    if (data_kind == "gaussian_mixture") {
        spec.kind = DataKind::gaussian_mixture;
    } else if (data_kind == "rings") {
        spec.kind = DataKind::rings;
    } else {
        throw ConfigError("config: data.kind must be gaussian_mixture or rings");
    }
    spec.dim = data_dim;
    spec.seed = derive_seed(seed, "data.generate");

    const auto center_strs = split(data_centers, ';');
    if (center_strs.empty()) throw ConfigError("config: data.centers is empty");
    const auto scale_strs = split(data_scales, ';');
    const auto weight_strs = data_weights.empty() ? std::vector<std::string>{}
                                                  : split(data_weights, ';');
    for (std::size_t c = 0; c < center_strs.size(); ++c) {
        Component comp;
        for (const std::string& coord : split(center_strs[c], ',')) {
            comp.center.push_back(parse_or_throw<double>("data.centers", trim(coord)));
        }
        const std::string& ss = scale_strs.empty()
                                    ? std::string("1")
                                    : scale_strs[std::min(c, scale_strs.size() - 1)];
        comp.scale = parse_or_throw<double>("data.scales", trim(ss));
        comp.weight = weight_strs.empty()
                          ? 1.0 / static_cast<double>(center_strs.size())
                          : parse_or_throw<double>("data.weights",
                                                   trim(weight_strs[std::min(
                                                       c, weight_strs.size() - 1)]));
        spec.components.push_back(std::move(comp));
    }
    spec.validate();
    return spec;
}

FlowConfig RunConfig::flow_config() const {
    FlowConfig cfg;
    cfg.dim = data_dim;
    cfg.num_layers = flow_layers;
    cfg.hidden = flow_hidden;
    cfg.scale_cap = flow_scale_cap;
    return cfg;
}

namespace {
OptimizerConfig make_opt(const std::string& method, double step, double b1, double b2, double eps,
                         long epochs, long batch, std::uint64_t seed) {
    OptimizerConfig o;
    if (method == "adam") {
        o.method = OptMethod::adam;
    } else if (method == "sgd") {
        o.method = OptMethod::sgd;
    } else {
        throw ConfigError("config: optimizer method must be adam or sgd");
    }
    o.step_size = step;
    o.beta1 = b1;
    o.beta2 = b2;
    o.eps = eps;
    o.max_epochs = epochs;
    o.batch_size = batch;
    o.seed = seed;
    return o;
}
}  // namespace

OptimizerConfig RunConfig::flow_opt() const {
    return make_opt(flow_opt_method, flow_opt_step_size, flow_opt_beta1, flow_opt_beta2,
                    flow_opt_eps, flow_opt_max_epochs, flow_opt_batch_size,
                    derive_seed(seed, "flow.opt"));
}

TailConfig RunConfig::tail_config() const {
    TailConfig cfg;
    cfg.dim = data_dim;
    if (tail_arch == "coupling") {
        cfg.arch = TailArch::coupling;
        cfg.num_layers = flow_layers;
        cfg.hidden = flow_hidden;
        cfg.scale_cap = flow_scale_cap;
    } else if (tail_arch == "feed_forward") {
        cfg.arch = TailArch::feed_forward;
        cfg.num_layers = tail_layers;
        cfg.hidden = tail_hidden;
    } else if (tail_arch == "residual") {
        cfg.arch = TailArch::residual;
        cfg.num_layers = tail_layers;
        cfg.hidden = tail_hidden;
    } else {
        throw ConfigError("config: tail.arch must be coupling, feed_forward, or residual");
    }
    return cfg;
}

TailInit RunConfig::tail_init_mode() const {
    if (tail_init == "from_density") return TailInit::from_density;
    if (tail_init == "random") return TailInit::random;
    throw ConfigError("config: tail.init must be from_density or random");
}

OptimizerConfig RunConfig::tail_opt() const {
    return make_opt(tail_opt_method, tail_opt_step_size, tail_opt_beta1, tail_opt_beta2,
                    tail_opt_eps, tail_opt_max_epochs, loss_n_batch,
                    derive_seed(seed, "tail.opt"));
}

TailTrainConfig RunConfig::tail_train_config() const {
    TailTrainConfig tc;
    tc.stop_rel_improvement = tail_stop_rel_improvement;
    tc.stop_window = tail_stop_window;
    tc.warmup_epochs = tail_warmup_epochs;
    tc.anchor_epochs = tail_anchor_epochs;
    tc.anchor_w_d = tail_anchor_w_d;
    return tc;
}

LossWeights RunConfig::loss_weights() const {
    LossWeights w;
    w.w_pr = loss_w_pr;
    w.w_d = loss_w_d;
    w.w_e = loss_w_e;
    w.w_sc = loss_w_sc;
    w.p = loss_p;
    w.q = loss_q;
    w.n_batch = loss_n_batch;
    w.m_sample = loss_m_sample;
    if (loss_distance_to == "data") {
        w.distance_to_generator = false;
    } else if (loss_distance_to == "generator") {
        w.distance_to_generator = true;
    } else {
        throw ConfigError("config: loss.distance_to must be data or generator");
    }
    w.log_domain_pr = loss_log_domain_pr;
    w.trim_quantile = loss_trim_quantile;
    return w;
}

ScoreConfig RunConfig::score_config() const {
    ScoreConfig cfg;
    cfg.epsilon = score_epsilon;
    cfg.epsilon_quantile = score_epsilon_quantile;
    cfg.alpha_density = score_alpha_density;
    cfg.alpha_distance = score_alpha_distance;
    cfg.p = score_p;
    return cfg;
}

FloorRule RunConfig::floor_rule() const {
    if (cluster_floor == "all_pairs") return FloorRule::all_pairs;
    if (cluster_floor == "shared_index") return FloorRule::shared_index;
    throw ConfigError("config: cluster.floor must be all_pairs or shared_index");
}

void RunConfig::validate() const {
    data_spec();
    flow_config().validate();
    flow_opt().validate();
    tail_config().validate();
    tail_init_mode();
    tail_opt().validate();
    loss_weights().validate();
    score_config().validate();
    floor_rule();
    if (!(data_holdout >= 0.0 && data_holdout < 1.0)) {
        throw ConfigError("config: data.holdout must be in [0, 1)");
    }
}

}  // namespace tailgen
