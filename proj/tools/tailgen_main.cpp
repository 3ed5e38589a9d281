// tailgen command-line interface: dataset construction, two-step training
// (density model, then tail generator), sample generation, anomaly scoring,
// and report evaluation. Every command prints its effective configuration;
// pipeline commands also write it next to their outputs so a run can be
// replayed bit-for-bit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tailgen/checkpoint.hpp"
#include "tailgen/clustering.hpp"
#include "tailgen/config.hpp"
#include "tailgen/data.hpp"
#include "tailgen/errors.hpp"
#include "tailgen/flow.hpp"
#include "tailgen/scoring.hpp"
#include "tailgen/tail.hpp"

namespace fs = std::filesystem;
using namespace tailgen;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunConfig load_config(const std::string& config_path, const std::vector<std::string>& sets) {
    RunConfig cfg = config_path.empty() ? RunConfig::defaults() : RunConfig::from_file(config_path);
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        std::string key = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        auto strip = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        };
        strip(key);
        strip(value);
        cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
}

void echo_config(const RunConfig& cfg, const fs::path& out_dir) {
    std::cout << cfg.echo();
    fs::create_directories(out_dir);
    cfg.write_echo((out_dir / "effective_config.txt").string());
}

/// Training data: an explicit CSV wins; otherwise generate from the config
/// spec and keep the train part of the holdout split.
Matrix resolve_train_data(const RunConfig& cfg, const std::string& data_path) {
    if (!data_path.empty()) {
        return load_dataset_csv(data_path).flatten();
    }
    ClusteredDataset ds = generate(cfg.data_spec(), cfg.data_n);
    auto [train, holdout] = split_holdout(ds, cfg.data_holdout, derive_seed(cfg.seed, "data.holdout"));
    return train.flatten();
}

int cmd_make_data(const RunConfig& cfg, double ood_shift, double ood_box, long ood_n) {
    const fs::path out_dir(cfg.out_dir);
    echo_config(cfg, out_dir);

    ClusteredDataset ds = generate(cfg.data_spec(), cfg.data_n);
    auto [train, holdout] =
        split_holdout(ds, cfg.data_holdout, derive_seed(cfg.seed, "data.holdout"));
    save_dataset_csv((out_dir / "full.csv").string(), ds);
    save_dataset_csv((out_dir / "train.csv").string(), train);
    save_dataset_csv((out_dir / "holdout.csv").string(), holdout);
    std::cout << "wrote " << (out_dir / "full.csv") << " (" << ds.total() << " rows), train "
              << train.total() << ", holdout " << holdout.total() << "\n";

    if (ood_shift > 0.0) {
        Matrix m = make_ood(holdout, OodMode::shift, ood_shift, ood_n,
                            derive_seed(cfg.seed, "data.ood_shift"));
        save_matrix_csv((out_dir / "ood_shift.csv").string(), m);
        std::cout << "wrote " << (out_dir / "ood_shift.csv") << " (" << m.rows << " rows)\n";
    }
    if (ood_box > 0.0) {
        Matrix m = make_ood(holdout, OodMode::uniform_box, ood_box, ood_n,
                            derive_seed(cfg.seed, "data.ood_box"));
        save_matrix_csv((out_dir / "ood_box.csv").string(), m);
        std::cout << "wrote " << (out_dir / "ood_box.csv") << " (" << m.rows << " rows)\n";
    }
    return 0;
}

int cmd_train_density(const RunConfig& cfg, const std::string& data_path) {
    const fs::path out_dir(cfg.out_dir);
    echo_config(cfg, out_dir);

    const Matrix train = resolve_train_data(cfg, data_path);
    FlowModel flow(cfg.flow_config(), derive_seed(cfg.seed, "flow.init"));
    const FitResult fit = fit_mle(flow, train, cfg.flow_opt());

    save_flow_checkpoint((out_dir / "flow.ckpt").string(), flow);
    {
        std::ofstream f(out_dir / "density_trace.csv");
        f << "epoch,nll\n";
        for (std::size_t e = 0; e < fit.nll_trace.size(); ++e) {
            f << e << "," << fmt17(fit.nll_trace[e]) << "\n";
        }
    }
    std::cout << "density: " << fit.epochs_run << " epochs, nll " << fit.nll_trace.front()
              << " -> " << fit.nll_trace.back() << "\n";
    std::cout << "wrote " << (out_dir / "flow.ckpt") << "\n";
    if (fit.aborted) {
        std::cerr << "training aborted on numeric failure; checkpoint holds the last good state\n";
        return kExitNumeric;
    }
    return 0;
}

int cmd_train_tail(const RunConfig& cfg, const std::string& density_path,
                   const std::string& data_path) {
    const fs::path out_dir(cfg.out_dir);
    echo_config(cfg, out_dir);

    FlowModel flow = load_flow_checkpoint(density_path);
    const Matrix train = resolve_train_data(cfg, data_path);
    if (train.cols != flow.dim()) {
        throw InputError("train-tail: data width does not match the density checkpoint");
    }
    TailNet tail = init_tail(flow, cfg.tail_init_mode(), derive_seed(cfg.seed, "tail.init"),
                             cfg.tail_config());
    const TailTrace trace =
        train_tail(tail, flow, train, cfg.loss_weights(), cfg.tail_opt(), cfg.tail_train_config());

    save_tail_checkpoint((out_dir / "tail.ckpt").string(), tail);
    {
        std::ofstream f(out_dir / "tail_trace.csv");
        f << "epoch,L_pr,L_d,L_e,L_sc,L_tot\n";
        for (std::size_t e = 0; e < trace.per_epoch.size(); ++e) {
            const LossTerms& lt = trace.per_epoch[e];
            f << e << "," << fmt17(lt.pr) << "," << fmt17(lt.d) << "," << fmt17(lt.e) << ","
              << fmt17(lt.sc) << "," << fmt17(lt.tot) << "\n";
        }
    }
    std::cout << "tail: " << trace.epochs_run << " epochs, L_tot "
              << trace.per_epoch.front().tot << " -> " << trace.per_epoch.back().tot << "\n";
    std::cout << "wrote " << (out_dir / "tail.ckpt") << "\n";
    if (trace.aborted) {
        std::cerr << "training aborted: " << trace.abort_reason
                  << "; checkpoint holds the best state\n";
        return kExitNumeric;
    }
    return 0;
}

int cmd_generate(const std::string& tail_path, long n, std::uint64_t seed,
                 const std::string& out_path) {
    std::cout << "tail = " << tail_path << "\nn = " << n << "\nseed = " << seed
              << "\nout = " << out_path << "\n";
    TailNet tail = load_tail_checkpoint(tail_path);
    save_matrix_csv(out_path, tail.generate(n, seed));
    std::cout << "wrote " << out_path << " (" << n << " rows)\n";
    return 0;
}

int cmd_score(const RunConfig& cfg, const std::string& density_path, const std::string& input_path,
              const std::string& train_path, const std::string& out_path) {
    std::cout << "density = " << density_path << "\ninput = " << input_path
              << "\ntrain = " << (train_path.empty() ? "(none)" : train_path)
              << "\nout = " << out_path << "\n";
    FlowModel flow = load_flow_checkpoint(density_path);
    const Matrix input = load_matrix_csv(input_path);
    if (input.cols != flow.dim()) {
        throw InputError("score: input width does not match the density checkpoint");
    }
    Matrix ref;
    ScoreConfig sc = cfg.score_config();
    bool with_support = sc.epsilon > 0.0;
    if (!train_path.empty()) {
        ref = load_matrix_csv(train_path);
        if (ref.cols != flow.dim()) {
            throw InputError("score: train data width does not match the density checkpoint");
        }
        if (sc.epsilon <= 0.0) {
            sc.epsilon = epsilon_from_quantile(flow, ref, sc.epsilon_quantile);
            with_support = true;
        }
    }
    std::cout << "epsilon = " << (with_support ? fmt17(sc.epsilon) : "(unset)") << "\n";

    std::ofstream f(out_path);
    if (!f) throw FormatError(out_path + ": cannot open for writing");
    f << (with_support ? "score,in_support\n" : "score\n");
    for (long i = 0; i < input.rows; ++i) {
        const double s = anomaly_score(input.row(i), flow, ref, sc);
        f << fmt17(s);
        if (with_support) f << "," << (support_membership(input.row(i), flow, sc) ? 1 : 0);
        f << "\n";
    }
    std::cout << "wrote " << out_path << " (" << input.rows << " rows)\n";
    return 0;
}

struct NamedData {
    std::string name;
    Matrix matrix;
    ClusteredDataset clustered;  // classes empty when the file had no labels
};

NamedData load_named(const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) {
        throw InputError("--data expects name=path, got '" + spec + "'");
    }
    NamedData nd;
    nd.name = spec.substr(0, eq);
    const std::string path = spec.substr(eq + 1);
    try {
        nd.clustered = load_dataset_csv(path);
        nd.matrix = nd.clustered.flatten();
    } catch (const FormatError&) {
        nd.matrix = load_matrix_csv(path);
    }
    return nd;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& density_path,
                 const std::string& tail_path, const std::vector<std::string>& data_specs,
                 long gen_n) {
    const fs::path out_dir(cfg.out_dir);
    echo_config(cfg, out_dir);

    FlowModel flow = load_flow_checkpoint(density_path);
    TailNet tail = load_tail_checkpoint(tail_path);
    if (data_specs.empty()) throw InputError("evaluate: at least one --data name=path required");

    std::vector<NamedData> named;
    std::vector<std::pair<std::string, Matrix>> datasets;
    for (const std::string& spec : data_specs) {
        named.push_back(load_named(spec));
        datasets.emplace_back(named.back().name, named.back().matrix);
    }

    const EvalReport report = build_report(tail, flow, datasets, cfg.loss_weights(),
                                           cfg.score_config(), derive_seed(cfg.seed, "evaluate.z"));
    {
        std::ofstream f(out_dir / "report.csv");
        f << report.to_csv();
        std::ofstream kv(out_dir / "report.kv");
        kv << report.to_kv();
    }
    std::cout << report.to_csv();

    // Proximity of generated boundary samples against the first dataset's
    // class structure (needs labeled data with at least two classes).
    {
        std::ofstream f(out_dir / "proximity_summary.csv");
        f << "n,satisfied_fraction,margin_mean,margin_median,margin_min,margin_max\n";
        const ClusteredDataset& ref = named.front().clustered;
        if (ref.num_classes() >= 2) {
            const Matrix gen = tail.generate(gen_n, derive_seed(cfg.seed, "evaluate.gen"));
            std::vector<double> margins;
            long satisfied = 0;
            for (long i = 0; i < gen.rows; ++i) {
                const ProximityResult pr =
                    check_proximity(gen.row(i), ref, cfg.score_config().p, cfg.floor_rule());
                margins.push_back(pr.margin);
                satisfied += pr.satisfied ? 1 : 0;
            }
            std::sort(margins.begin(), margins.end());
            double mean = 0.0;
            for (double m : margins) mean += m;
            mean /= static_cast<double>(margins.size());
            const double median = margins[margins.size() / 2];
            f << gen.rows << "," << fmt17(static_cast<double>(satisfied) / gen.rows) << ","
              << fmt17(mean) << "," << fmt17(median) << "," << fmt17(margins.front()) << ","
              << fmt17(margins.back()) << "\n";
            std::cout << "proximity: " << satisfied << "/" << gen.rows << " satisfied\n";
        } else {
            f << "0,0,0,0,0,0\n";
            std::cout << "proximity: skipped (first dataset has no class structure)\n";
        }
    }
    std::cout << "wrote " << (out_dir / "report.csv") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-density + tail-generator anomaly detection toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_path, density_path, tail_path, input_path, train_path, out_path;
    std::vector<std::string> sets, data_specs;
    double ood_shift = 0.0, ood_box = 0.0;
    long ood_n = 0, gen_n = 1000, n = 100;
    std::uint64_t seed = 0;

    auto* make_data = app.add_subcommand("make-data", "generate a labeled synthetic dataset");
    make_data->add_option("--config", config_path, "config file");
    make_data->add_option("--set", sets, "override config key=value");
    make_data->add_option("--ood-shift", ood_shift, "also write a shifted OoD set (magnitude)");
    make_data->add_option("--ood-box", ood_box, "also write a uniform-box OoD set (inflation)");
    make_data->add_option("--ood-n", ood_n, "OoD sample count (0 = dataset size)");

    auto* train_density = app.add_subcommand("train-density", "fit the flow density model");
    train_density->add_option("--config", config_path, "config file");
    train_density->add_option("--set", sets, "override config key=value");
    train_density->add_option("--data", data_path, "training dataset CSV (label column)");

    auto* train_tail_cmd = app.add_subcommand("train-tail", "train the tail generator");
    train_tail_cmd->add_option("--config", config_path, "config file");
    train_tail_cmd->add_option("--set", sets, "override config key=value");
    train_tail_cmd->add_option("--density", density_path, "flow checkpoint")->required();
    train_tail_cmd->add_option("--data", data_path, "training dataset CSV (label column)");

    auto* generate_cmd = app.add_subcommand("generate", "sample the tail generator");
    generate_cmd->add_option("--tail", tail_path, "tail checkpoint")->required();
    generate_cmd->add_option("--n", n, "sample count")->required();
    generate_cmd->add_option("--seed", seed, "sample seed");
    generate_cmd->add_option("--out", out_path, "output CSV")->required();

    auto* score_cmd = app.add_subcommand("score", "anomaly-score points against a density");
    score_cmd->add_option("--config", config_path, "config file");
    score_cmd->add_option("--set", sets, "override config key=value");
    score_cmd->add_option("--density", density_path, "flow checkpoint")->required();
    score_cmd->add_option("--input", input_path, "points CSV")->required();
    score_cmd->add_option("--train", train_path, "reference data CSV for the distance term");
    score_cmd->add_option("--out", out_path, "output CSV")->required();

    auto* evaluate_cmd = app.add_subcommand("evaluate", "loss/metric report over datasets");
    evaluate_cmd->add_option("--config", config_path, "config file");
    evaluate_cmd->add_option("--set", sets, "override config key=value");
    evaluate_cmd->add_option("--density", density_path, "flow checkpoint")->required();
    evaluate_cmd->add_option("--tail", tail_path, "tail checkpoint")->required();
    evaluate_cmd->add_option("--data", data_specs, "name=path (first entry = normal)")->required();
    evaluate_cmd->add_option("--gen-n", gen_n, "boundary samples for the proximity summary");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*make_data) return cmd_make_data(load_config(config_path, sets), ood_shift, ood_box, ood_n);
        if (*train_density) return cmd_train_density(load_config(config_path, sets), data_path);
        if (*train_tail_cmd) {
            return cmd_train_tail(load_config(config_path, sets), density_path, data_path);
        }
        if (*generate_cmd) return cmd_generate(tail_path, n, seed, out_path);
        if (*score_cmd) {
            return cmd_score(load_config(config_path, sets), density_path, input_path, train_path,
                             out_path);
        }
        if (*evaluate_cmd) {
            return cmd_evaluate(load_config(config_path, sets), density_path, tail_path, data_specs,
                                gen_n);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}
