#include "tailgen/tail.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "tailgen/rng.hpp"

namespace tailgen {

namespace {

double p_norm(std::span<const double> v, double p) {
    if (p == 2.0) {
        double acc = 0.0;
        for (double x : v) acc += x * x;
        return std::sqrt(acc);
    }
    if (p == 1.0) {
        double acc = 0.0;
        for (double x : v) acc += std::abs(x);
        return acc;
    }
    double acc = 0.0;
    for (double x : v) acc += std::pow(std::abs(x), p);
    return std::pow(acc, 1.0 / p);
}

// d||v||_p / dv into out; zero vector when dist == 0 (subgradient choice).
void p_norm_grad(std::span<const double> v, double p, double dist, std::span<double> out) {
    if (dist <= 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (p == 2.0) {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k] / dist;
        return;
    }
    if (p == 1.0) {
        for (std::size_t k = 0; k < v.size(); ++k)
            out[k] = (v[k] > 0.0) - (v[k] < 0.0);
        return;
    }
    const double dp = std::pow(dist, p - 1.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double sign = (v[k] > 0.0) - (v[k] < 0.0);
        out[k] = sign * std::pow(std::abs(v[k]), p - 1.0) / dp;
    }
}

std::vector<double> diff(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
    return d;
}

}  // namespace

void TailConfig::validate() const {
    if (dim < 2) throw ConfigError("tail: dim must be >= 2");
    if (hidden < 1) throw ConfigError("tail: hidden must be >= 1");
    if (num_layers < 1) throw ConfigError("tail: num_layers must be >= 1");
    if (arch == TailArch::coupling && !(scale_cap > 0.0)) {
        throw ConfigError("tail: scale_cap must be > 0");
    }
}

TailNet::TailNet(TailConfig cfg, std::vector<double> params)
    : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    long expect = 0;
    switch (cfg_.arch) {
        case TailArch::coupling:
            stack_.emplace(cfg_.dim, cfg_.num_layers, cfg_.hidden, cfg_.scale_cap);
            expect = stack_->total_params();
            break;
        case TailArch::feed_forward: {
            std::vector<long> sizes;
            sizes.push_back(cfg_.dim);
            for (long l = 0; l < cfg_.num_layers - 1; ++l) sizes.push_back(cfg_.hidden);
            sizes.push_back(cfg_.dim);
            mlp_.emplace(std::move(sizes));
            expect = mlp_->param_count();
            break;
        }
        case TailArch::residual:
            mlp_.emplace(std::vector<long>{cfg_.dim, cfg_.hidden, cfg_.dim});
            expect = mlp_->param_count() * cfg_.num_layers;
            break;
    }
    if (static_cast<long>(params_.size()) != expect) {
        throw ConfigError("tail: parameter vector size mismatch (got " +
                          std::to_string(params_.size()) + ", expected " + std::to_string(expect) +
                          ")");
    }
}

TailNet make_tail_from_parts(TailConfig cfg, std::vector<double> params) {
    return TailNet(cfg, std::move(params));
}

TailNet TailNet::from_density(const FlowModel& density) {
    TailConfig cfg;
    cfg.dim = density.config().dim;
    cfg.arch = TailArch::coupling;
    cfg.hidden = density.config().hidden;
    cfg.num_layers = density.config().num_layers;
    cfg.scale_cap = density.config().scale_cap;
    return TailNet(cfg, density.params());
}

TailNet TailNet::random_init(const TailConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    long count = 0;
    switch (cfg.arch) {
        case TailArch::coupling: {
            CouplingStack s(cfg.dim, cfg.num_layers, cfg.hidden, cfg.scale_cap);
            count = s.total_params();
            break;
        }
        case TailArch::feed_forward: {
            std::vector<long> sizes{cfg.dim};
            for (long l = 0; l < cfg.num_layers - 1; ++l) sizes.push_back(cfg.hidden);
            sizes.push_back(cfg.dim);
            count = Mlp(sizes).param_count();
            break;
        }
        case TailArch::residual:
            count = Mlp({cfg.dim, cfg.hidden, cfg.dim}).param_count() * cfg.num_layers;
            break;
    }
    std::vector<double> params(count);
    const double bound = 0.3;
    for (double& v : params) v = rng.uniform(-bound, bound);
    return TailNet(cfg, std::move(params));
}

TailNet init_tail(const FlowModel& density, TailInit mode, std::uint64_t seed,
                  const TailConfig& random_cfg) {
    if (mode == TailInit::from_density) return TailNet::from_density(density);
    TailConfig cfg = random_cfg;
    cfg.dim = (cfg.dim == 2 && density.dim() != 2) ? density.dim() : cfg.dim;
    if (cfg.dim != density.dim()) {
        throw ConfigError("init_tail: tail dim " + std::to_string(cfg.dim) +
                          " does not match density dim " + std::to_string(density.dim()));
    }
    return TailNet::random_init(cfg, seed);
}

TailNet::Work TailNet::make_work() const {
    Work w;
    w.z.resize(cfg_.dim);
    w.grad.resize(cfg_.dim);
    w.gu.resize(cfg_.dim);
    if (stack_) {
        w.cw = stack_->make_work();
    } else if (cfg_.arch == TailArch::feed_forward) {
        w.acts.resize(mlp_->act_count());
        w.scratch.resize(2 * mlp_->max_width());
    } else {
        w.acts.resize(mlp_->act_count() * cfg_.num_layers);
        w.states.resize((cfg_.num_layers + 1) * cfg_.dim);
        w.scratch.resize(2 * mlp_->max_width());
    }
    return w;
}

void TailNet::forward_cached(std::span<const double> z, Work& w) const {
    std::memcpy(w.z.data(), z.data(), sizeof(double) * cfg_.dim);
    switch (cfg_.arch) {
        case TailArch::coupling:
            stack_->forward_cached(params_, z, w.cw);
            break;
        case TailArch::feed_forward:
            mlp_->forward(params_.data(), z.data(), w.acts.data());
            break;
        case TailArch::residual: {
            std::memcpy(w.states.data(), z.data(), sizeof(double) * cfg_.dim);
            const long per = mlp_->param_count();
            for (long b = 0; b < cfg_.num_layers; ++b) {
                const double* in = w.states.data() + b * cfg_.dim;
                double* out = w.states.data() + (b + 1) * cfg_.dim;
                double* acts = w.acts.data() + b * mlp_->act_count();
                mlp_->forward(params_.data() + b * per, in, acts);
                const double* block_out = acts + mlp_->act_count() - cfg_.dim;
                for (long j = 0; j < cfg_.dim; ++j) out[j] = in[j] + block_out[j];
            }
            break;
        }
    }
}

std::span<const double> TailNet::work_output(const Work& w) const {
    switch (cfg_.arch) {
        case TailArch::coupling:
            return stack_->work_output(w.cw);
        case TailArch::feed_forward:
            return {w.acts.data() + mlp_->act_count() - cfg_.dim,
                    static_cast<std::size_t>(cfg_.dim)};
        default:
            return {w.states.data() + cfg_.num_layers * cfg_.dim,
                    static_cast<std::size_t>(cfg_.dim)};
    }
}

void TailNet::backward(Work& w, std::span<const double> g_x, std::span<double> g_params) const {
    switch (cfg_.arch) {
        case TailArch::coupling:
            stack_->forward_backward(params_, w.cw, g_x, g_params, {});
            break;
        case TailArch::feed_forward:
            mlp_->backward(params_.data(), w.z.data(), w.acts.data(), g_x.data(), g_params.data(),
                           nullptr, w.scratch.data());
            break;
        case TailArch::residual: {
            const long per = mlp_->param_count();
            std::memcpy(w.grad.data(), g_x.data(), sizeof(double) * cfg_.dim);
            for (long b = cfg_.num_layers - 1; b >= 0; --b) {
                const double* in = w.states.data() + b * cfg_.dim;
                const double* acts = w.acts.data() + b * mlp_->act_count();
                mlp_->backward(params_.data() + b * per, in, acts, w.grad.data(),
                               g_params.data() + b * per, w.gu.data(), w.scratch.data());
                // out = in + block(in): skip connection adds the block input grad.
                for (long j = 0; j < cfg_.dim; ++j) w.grad[j] += w.gu[j];
            }
            break;
        }
    }
}

std::vector<double> TailNet::forward(std::span<const double> z) const {
    require_dim(z, cfg_.dim, "tail forward input");
    require_finite(z, "tail forward input");
    Work w = make_work();
    forward_cached(z, w);
    auto out = work_output(w);
    return {out.begin(), out.end()};
}

Matrix TailNet::generate(long n, std::uint64_t seed) const {
    if (n < 0) throw InputError("generate: n must be >= 0");
    Matrix out(n, cfg_.dim);
    Rng rng(seed);
    std::vector<double> z(cfg_.dim);
    Work w = make_work();
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < cfg_.dim; ++j) z[j] = rng.normal();
        forward_cached(z, w);
        auto x = work_output(w);
        std::memcpy(out[i], x.data(), sizeof(double) * cfg_.dim);
    }
    return out;
}

void LossWeights::validate() const {
    if (w_pr != 1.0) throw InputError("loss: w_pr is fixed at 1.0");
    if (w_d < 0.0 || w_e < 0.0 || w_sc < 0.0) throw InputError("loss: weights must be >= 0");
    if (!(p >= 1.0) || !(q >= 1.0)) throw InputError("loss: p and q must be >= 1");
    if (n_batch < 1) throw InputError("loss: n_batch must be >= 1");
    if (m_sample < 0) throw InputError("loss: m_sample must be >= 0");
    if (!(trim_quantile >= 0.0 && trim_quantile < 1.0)) {
        throw InputError("loss: trim_quantile must be in [0, 1)");
    }
}

namespace {

struct BatchEval {
    std::vector<std::vector<double>> x;       // T(z_i)
    std::vector<double> logp;                 // log p(T(z_i))
    std::vector<std::vector<double>> dlogp;   // d log p / dx at T(z_i)
    std::vector<TailNet::Work> works;         // cached forwards (grad mode only)
};

LossTerms loss_terms_impl(const TailNet& tail, const Matrix& z_batch, const Matrix& data,
                          const FlowModel& density, const LossWeights& w, bool want_grad,
                          std::span<double> g_theta) {
    const long d = tail.dim();
    const long N = z_batch.rows;
    const long M = data.rows;
    if (z_batch.cols != d) throw InputError("loss_terms: z batch width != tail dim");
    if (data.cols != d) throw InputError("loss_terms: data width != tail dim");
    if (density.dim() != d) throw InputError("loss_terms: density dim != tail dim");
    if (N < 1) throw InputError("loss_terms: z batch is empty");
    if (M < 1) throw InputError("loss_terms: data is empty");
    if (w.w_sc != 0.0 && N < 2) {
        throw InputError("loss_terms: scattering term needs a batch of at least 2 latents");
    }
    require_finite({z_batch.data.data(), z_batch.data.size()}, "loss_terms z batch");
    require_finite({data.data.data(), data.data.size()}, "loss_terms data");

    BatchEval ev;
    ev.x.resize(N);
    ev.logp.resize(N);
    if (want_grad) {
        ev.dlogp.assign(N, std::vector<double>(d, 0.0));
        ev.works.reserve(N);
    }
    for (long i = 0; i < N; ++i) {
        if (want_grad) {
            ev.works.push_back(tail.make_work());
            tail.forward_cached(z_batch.row(i), ev.works.back());
            auto out = tail.work_output(ev.works.back());
            ev.x[i].assign(out.begin(), out.end());
            ev.logp[i] = density.log_density_grad_x(ev.x[i], ev.dlogp[i]);
        } else {
            ev.x[i] = tail.forward(z_batch.row(i));
            ev.logp[i] = density.log_density(ev.x[i]);
        }
    }

    LossTerms lt;
    const double invN = 1.0 / static_cast<double>(N);

    // Probability and entropy terms (data-independent).
    for (long i = 0; i < N; ++i) {
        const double pg = std::exp(ev.logp[i]);
        lt.pr += w.log_domain_pr ? ev.logp[i] : pg;
        lt.e += pg * ev.logp[i];
    }
    lt.pr *= invN;
    lt.e *= invN;

    // Scattering term: latents and parameters only.
    std::vector<double> sc_pair;  // (D_x, A) per ordered pair, reused for grad
    if (w.w_sc != 0.0) {
        double sc = 0.0;
        const double inv_pairs = invN / static_cast<double>(N - 1);
        for (long i = 0; i < N; ++i) {
            for (long j = 0; j < N; ++j) {
                if (j == i) continue;
                const auto vz = diff(z_batch.row(i), z_batch.row(j));
                const auto vx = diff(ev.x[i], ev.x[j]);
                const double dz = p_norm(vz, w.p);
                const double dx = p_norm(vx, w.p);
                if (dx == 0.0) throw ModeCollapseError(static_cast<int>(i), static_cast<int>(j));
                sc += std::pow(dz, w.q) / std::pow(dx, w.q);
            }
        }
        lt.sc = sc * inv_pairs;
    }

    // Distance term: nearest data row per generated point.
    std::vector<long> nearest(N, -1);
    for (long i = 0; i < N; ++i) {
        double best = 0.0;
        long best_j = -1;
        for (long j = 0; j < M; ++j) {
            const double* xr = data[j];
            double dist;
            if (w.p == 2.0) {
                double acc = 0.0;
                for (long k = 0; k < d; ++k) {
                    const double t = ev.x[i][k] - xr[k];
                    acc += t * t;
                }
                dist = acc;  // compare squared, sqrt once at the end
            } else {
                std::vector<double> v(d);
                for (long k = 0; k < d; ++k) v[k] = ev.x[i][k] - xr[k];
                dist = p_norm(v, w.p);
            }
            if (best_j < 0 || dist < best) {
                best = dist;
                best_j = j;
            }
        }
        nearest[i] = best_j;
        lt.d += (w.p == 2.0) ? std::sqrt(best) : best;
    }
    lt.d *= invN;

    lt.tot = w.w_pr * lt.pr + w.w_d * lt.d + w.w_e * lt.e + w.w_sc * lt.sc;

    if (!want_grad) return lt;

    // Assemble per-point cotangents and push them through T.
    std::vector<double> cot(d);
    std::vector<double> nrm(d);
    const double inv_pairs = invN / static_cast<double>(std::max<long>(N - 1, 1));
    for (long i = 0; i < N; ++i) {
        std::fill(cot.begin(), cot.end(), 0.0);
        const double pg = std::exp(ev.logp[i]);

        double density_chain = 0.0;
        density_chain += w.w_pr * invN * (w.log_domain_pr ? 1.0 : pg);
        density_chain += w.w_e * invN * pg * (1.0 + ev.logp[i]);
        for (long k = 0; k < d; ++k) cot[k] += density_chain * ev.dlogp[i][k];

        if (w.w_d != 0.0 && nearest[i] >= 0) {
            const auto v = diff(ev.x[i], data.row(nearest[i]));
            const double dist = p_norm(v, w.p);
            p_norm_grad(v, w.p, dist, nrm);
            for (long k = 0; k < d; ++k) cot[k] += w.w_d * invN * nrm[k];
        }

        if (w.w_sc != 0.0) {
            for (long j = 0; j < N; ++j) {
                if (j == i) continue;
                const auto vz = diff(z_batch.row(i), z_batch.row(j));
                const auto vx = diff(ev.x[i], ev.x[j]);
                const double dz = p_norm(vz, w.p);
                const double dx = p_norm(vx, w.p);
                // Cushioned denominator for the gradient only.
                const double dxg = dx + 1e-12;
                const double a = std::pow(dz, w.q);
                const double coef = -a * w.q / std::pow(dxg, w.q + 1.0);
                p_norm_grad(vx, w.p, dx, nrm);
                // x_i appears in the (i,j) and (j,i) terms symmetrically.
                const double scale = 2.0 * w.w_sc * inv_pairs * coef;
                for (long k = 0; k < d; ++k) cot[k] += scale * nrm[k];
            }
        }

        tail.backward(ev.works[i], cot, g_theta);
    }
    return lt;
}

}  // namespace

LossTerms loss_terms(const TailNet& tail, const Matrix& z_batch, const Matrix& data,
                     const FlowModel& density, const LossWeights& w) {
    return loss_terms_impl(tail, z_batch, data, density, w, false, {});
}

LossTerms loss_terms_grad(const TailNet& tail, const Matrix& z_batch, const Matrix& data,
                          const FlowModel& density, const LossWeights& w,
                          std::span<double> g_theta) {
    if (static_cast<long>(g_theta.size()) != tail.param_count()) {
        throw InputError("loss_terms_grad: gradient buffer size mismatch");
    }
    return loss_terms_impl(tail, z_batch, data, density, w, true, g_theta);
}

TailTrace train_tail(TailNet& tail, const FlowModel& density, const Matrix& data,
                     const LossWeights& w, const OptimizerConfig& opt,
                     const TailTrainConfig& tc) {
    w.validate();
    opt.validate();
    if (data.cols != tail.dim()) throw InputError("train_tail: data width != tail dim");
    if (data.rows < 1) throw InputError("train_tail: data is empty");

    const long N = w.n_batch;
    const long M = (w.m_sample > 0) ? std::min<long>(w.m_sample, data.rows) : data.rows;
    if (N > M) throw InputError("train_tail: batch size N exceeds sample size M");

    // Distance reference for the per-epoch gradient. With m_sample below the
    // data size, a fresh M-row subset is drawn every epoch (minibatching the
    // data side of the distance term); the trace is always evaluated against
    // the full reference so it stays comparable across epochs.
    Matrix full_ref;
    if (w.distance_to_generator) {
        full_ref = density.sample(data.rows, derive_seed(opt.seed, "tail.gen_data"));
    } else {
        full_ref = data;
    }
    if (w.trim_quantile > 0.0) {
        std::vector<double> dens(full_ref.rows);
        for (long i = 0; i < full_ref.rows; ++i) dens[i] = density.log_density(full_ref.row(i));
        std::vector<double> sorted = dens;
        std::sort(sorted.begin(), sorted.end());
        const double pos = w.trim_quantile * static_cast<double>(full_ref.rows - 1);
        const long lo = static_cast<long>(pos);
        const long hi = std::min<long>(lo + 1, full_ref.rows - 1);
        const double cut = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
        Matrix kept(full_ref.rows, full_ref.cols);
        long nk = 0;
        for (long i = 0; i < full_ref.rows; ++i) {
            if (dens[i] >= cut) {
                std::memcpy(kept[nk++], full_ref[i], sizeof(double) * full_ref.cols);
            }
        }
        if (nk >= std::max<long>(N, 1)) {
            kept.rows = nk;
            kept.data.resize(static_cast<std::size_t>(nk) * kept.cols);
            full_ref = std::move(kept);
        }
    }
    const bool resample_dist = M < full_ref.rows;
    Rng pick(derive_seed(opt.seed, "tail.subsample"));
    Matrix dist_data;
    std::vector<long> pick_order(full_ref.rows);
    auto draw_dist_subset = [&]() {
        for (long i = 0; i < full_ref.rows; ++i) pick_order[i] = i;
        for (long i = full_ref.rows - 1; i > 0; --i) {
            const long j = static_cast<long>(pick.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(pick_order[i], pick_order[j]);
        }
        for (long i = 0; i < M; ++i) {
            std::memcpy(dist_data[i], full_ref[pick_order[i]], sizeof(double) * full_ref.cols);
        }
    };
    if (resample_dist) dist_data = Matrix(M, full_ref.cols);

    // Fixed evaluation batch: the trace is comparable across epochs.
    Matrix eval_z(N, tail.dim());
    {
        Rng rng(derive_seed(opt.seed, "tail.eval_z"));
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < tail.dim(); ++j) eval_z[i][j] = rng.normal();
    }
    Rng train_rng(derive_seed(opt.seed, "tail.train_z"));

    TailTrace trace;
    std::vector<double>& params = tail.params();
    std::vector<double> grad(params.size(), 0.0);
    std::vector<double> best_params = params;
    OptState state;

    LossTerms lt0 = loss_terms(tail, eval_z, full_ref, density, w);
    trace.per_epoch.push_back(lt0);
    double best_tot = std::numeric_limits<double>::infinity();
    std::vector<double> best_history;

    // Warmup machinery: mean squared error against the generator's map.
    TailNet::Work warm_work = tail.make_work();
    std::vector<double> warm_target(tail.dim());
    std::vector<double> warm_cot(tail.dim());
    auto warmup_grad = [&](const Matrix& z_batch, std::span<double> g) {
        const double inv = 2.0 / static_cast<double>(z_batch.rows);
        for (long i = 0; i < z_batch.rows; ++i) {
            tail.forward_cached(z_batch.row(i), warm_work);
            auto out = tail.work_output(warm_work);
            density.stack().forward(density.params(), z_batch.row(i), warm_target, nullptr);
            for (long j = 0; j < tail.dim(); ++j) {
                warm_cot[j] = inv * (out[j] - warm_target[j]);
            }
            tail.backward(warm_work, warm_cot, g);
        }
    };

    LossWeights anchor = w;
    anchor.w_d = tc.anchor_w_d;
    anchor.w_e = 0.0;
    anchor.w_sc = 0.0;

    Matrix zb(N, tail.dim());
    int collapse_streak = 0;
    // max_epochs == 0 means "do not train", warmup and anchor included.
    const long warm_end = std::max<long>(tc.warmup_epochs, 0);
    const long anchor_end = warm_end + std::max<long>(tc.anchor_epochs, 0);
    const long total_epochs = opt.max_epochs == 0 ? 0 : anchor_end + opt.max_epochs;
    bool any_step = false;
    for (long epoch = 0; epoch < total_epochs; ++epoch) {
        const bool in_warmup = epoch < warm_end;
        const bool in_anchor = !in_warmup && epoch < anchor_end;
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < tail.dim(); ++j) zb[i][j] = train_rng.normal();
        if (resample_dist) draw_dist_subset();

        std::fill(grad.begin(), grad.end(), 0.0);
        bool stepped = false;
        try {
            if (in_warmup) {
                warmup_grad(zb, grad);
            } else {
                loss_terms_grad(tail, zb, resample_dist ? dist_data : full_ref, density,
                                in_anchor ? anchor : w, grad);
            }
            opt_step(params, grad, state, opt);
            stepped = true;
            any_step = true;
            collapse_streak = 0;
        } catch (const ModeCollapseError& mc) {
            if (++collapse_streak >= 5) {
                if (std::isfinite(best_tot)) params = best_params;
                trace.aborted = true;
                trace.abort_reason = std::string("persistent mode collapse: ") + mc.what();
                break;
            }
        } catch (const NumericError& ne) {
            if (std::isfinite(best_tot)) params = best_params;
            trace.aborted = true;
            trace.abort_reason = std::string("numeric failure: ") + ne.what();
            break;
        }

        LossTerms lt;
        try {
            lt = loss_terms(tail, eval_z, full_ref, density, w);
        } catch (const NumericError& ne) {
            if (std::isfinite(best_tot)) params = best_params;
            trace.aborted = true;
            trace.abort_reason = std::string("evaluation failed: ") + ne.what();
            break;
        }
        if (!std::isfinite(lt.tot)) {
            if (std::isfinite(best_tot)) params = best_params;
            trace.aborted = true;
            trace.abort_reason = "non-finite loss";
            break;
        }
        trace.per_epoch.push_back(lt);
        trace.epochs_run = epoch + 1;
        if (in_warmup || in_anchor) continue;

        // Best tracking and the improvement stop engage in the main phase.
        if (stepped && lt.tot < best_tot) {
            best_tot = lt.tot;
            best_params = params;
        }
        best_history.push_back(best_tot);
        if (tc.stop_window > 0 &&
            static_cast<long>(best_history.size()) > tc.stop_window) {
            const double before = best_history[best_history.size() - 1 - tc.stop_window];
            const double now = best_history.back();
            const double rel = (before - now) / std::max(std::abs(before), 1e-12);
            if (rel < tc.stop_rel_improvement) break;
        }
    }
    if (std::isfinite(best_tot)) {
        params = best_params;
    } else if (!any_step) {
        params = best_params;  // zero-epoch call: hand back the input unchanged
    }
    return trace;
}

}  // namespace tailgen
