// Python bindings for the tailgen core: density model, tail generator,
// clustering/proximity checks, scoring metrics, and dataset utilities.

#include <cstdio>
#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tailgen/checkpoint.hpp"
#include "tailgen/clustering.hpp"
#include "tailgen/config.hpp"
#include "tailgen/data.hpp"
#include "tailgen/flow.hpp"
#include "tailgen/numerics.hpp"
#include "tailgen/scoring.hpp"
#include "tailgen/tail.hpp"

namespace py = pybind11;
using namespace tailgen;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw InputError("expected a 2-d array");
    Matrix m(static_cast<long>(arr.shape(0)), static_cast<long>(arr.shape(1)));
    std::memcpy(m.data.data(), arr.data(), sizeof(double) * m.data.size());
    return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::memcpy(arr.mutable_data(), m.data.data(), sizeof(double) * m.data.size());
    return arr;
}

std::vector<double> to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 1) throw InputError("expected a 1-d array");
    return {arr.data(), arr.data() + arr.shape(0)};
}

py::array_t<double> from_vec(const std::vector<double>& v) {
    py::array_t<double> arr({static_cast<py::ssize_t>(v.size())});
    std::fprintf(stderr, "[from_vec] n=%zu ndim=%d shape0=%ld stride0=%ld data=%p\n",
                 v.size(), int(arr.ndim()), long(arr.shape(0)), long(arr.strides(0)),
                 static_cast<const void*>(arr.data()));
    std::memcpy(arr.mutable_data(), v.data(), sizeof(double) * v.size());
    std::fprintf(stderr, "[from_vec] out[0]=%g out[last]=%g\n", arr.data()[0],
                 arr.data()[arr.shape(0) - 1]);
    return arr;
}

ClusteredDataset to_dataset(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                            const py::array_t<long, py::array::c_style | py::array::forcecast>& labels) {
    const Matrix flat = to_matrix(x);
    if (labels.ndim() != 1 || labels.shape(0) != flat.rows) {
        throw InputError("labels must be 1-d with one entry per row");
    }
    long k = 0;
    for (long i = 0; i < flat.rows; ++i) k = std::max(k, labels.at(i) + 1);
    std::vector<std::vector<long>> members(k);
    for (long i = 0; i < flat.rows; ++i) {
        const long l = labels.at(i);
        if (l < 0) throw InputError("labels must be non-negative");
        members[l].push_back(i);
    }
    ClusteredDataset ds;
    ds.dim = flat.cols;
    for (const auto& rows : members) {
        if (rows.empty()) throw InputError("labels must be dense 0..K-1");
        Matrix c(static_cast<long>(rows.size()), flat.cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::memcpy(c[static_cast<long>(r)], flat[rows[r]], sizeof(double) * flat.cols);
        }
        ds.classes.push_back(std::move(c));
    }
    return ds;
}

py::tuple dataset_to_py(const ClusteredDataset& ds) {
    const Matrix flat = ds.flatten();
    const auto labels = ds.labels();
    py::array_t<long> lab({static_cast<py::ssize_t>(labels.size())});
    std::memcpy(lab.mutable_data(), labels.data(), sizeof(long) * labels.size());
    return py::make_tuple(from_matrix(flat), lab);
}

}  // namespace

PYBIND11_MODULE(_tailgen, m) {
    m.doc() = "Flow-density estimation, tail-boundary sample generation, and "
              "density+distance anomaly scoring.";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("lambert_w", [](double x) { return static_cast<double>(lambert_w(x)); },
          py::arg("x"), "Principal branch W0 of the Lambert W function.");

    py::class_<FlowConfig>(m, "FlowConfig")
        .def(py::init<>())
        .def_readwrite("dim", &FlowConfig::dim)
        .def_readwrite("num_layers", &FlowConfig::num_layers)
        .def_readwrite("hidden", &FlowConfig::hidden)
        .def_readwrite("scale_cap", &FlowConfig::scale_cap);

    py::class_<OptimizerConfig>(m, "OptimizerConfig")
        .def(py::init<>())
        .def_readwrite("step_size", &OptimizerConfig::step_size)
        .def_readwrite("beta1", &OptimizerConfig::beta1)
        .def_readwrite("beta2", &OptimizerConfig::beta2)
        .def_readwrite("eps", &OptimizerConfig::eps)
        .def_readwrite("max_epochs", &OptimizerConfig::max_epochs)
        .def_readwrite("batch_size", &OptimizerConfig::batch_size)
        .def_readwrite("seed", &OptimizerConfig::seed);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("nll_trace", &FitResult::nll_trace)
        .def_readonly("aborted", &FitResult::aborted)
        .def_readonly("epochs_run", &FitResult::epochs_run);

    py::class_<FlowModel>(m, "FlowModel")
        .def(py::init<const FlowConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed"))
        .def_property_readonly("dim", &FlowModel::dim)
        .def("forward", [](const FlowModel& f, py::array_t<double> z) {
            return from_vec(f.forward(to_vec(z)));
        })
        .def("inverse", [](const FlowModel& f, py::array_t<double> x) {
            return from_vec(f.inverse(to_vec(x)));
        })
        .def("log_density", [](const FlowModel& f, py::array_t<double> x) {
            return f.log_density(to_vec(x));
        })
        .def("log_densities", [](const FlowModel& f, py::array_t<double> x) {
            const Matrix mx = to_matrix(x);
            py::array_t<double> out({static_cast<py::ssize_t>(mx.rows)});
            for (long i = 0; i < mx.rows; ++i) out.mutable_at(i) = f.log_density(mx.row(i));
            return out;
        })
        .def("sample", [](const FlowModel& f, long n, std::uint64_t seed) {
            return from_matrix(f.sample(n, seed));
        }, py::arg("n"), py::arg("seed"));

    m.def("fit_mle", [](FlowModel& model, py::array_t<double> data, const OptimizerConfig& opt) {
        return fit_mle(model, to_matrix(data), opt);
    }, py::arg("model"), py::arg("data"), py::arg("opt"),
       "Maximum-likelihood training of the flow on data rows.");

    py::enum_<TailArch>(m, "TailArch")
        .value("coupling", TailArch::coupling)
        .value("feed_forward", TailArch::feed_forward)
        .value("residual", TailArch::residual);

    py::enum_<TailInit>(m, "TailInit")
        .value("from_density", TailInit::from_density)
        .value("random", TailInit::random);

    py::class_<TailConfig>(m, "TailConfig")
        .def(py::init<>())
        .def_readwrite("dim", &TailConfig::dim)
        .def_readwrite("arch", &TailConfig::arch)
        .def_readwrite("hidden", &TailConfig::hidden)
        .def_readwrite("num_layers", &TailConfig::num_layers)
        .def_readwrite("scale_cap", &TailConfig::scale_cap);

    py::class_<LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("w_pr", &LossWeights::w_pr)
        .def_readwrite("w_d", &LossWeights::w_d)
        .def_readwrite("w_e", &LossWeights::w_e)
        .def_readwrite("w_sc", &LossWeights::w_sc)
        .def_readwrite("p", &LossWeights::p)
        .def_readwrite("q", &LossWeights::q)
        .def_readwrite("n_batch", &LossWeights::n_batch)
        .def_readwrite("m_sample", &LossWeights::m_sample)
        .def_readwrite("distance_to_generator", &LossWeights::distance_to_generator)
        .def_readwrite("log_domain_pr", &LossWeights::log_domain_pr)
        .def_readwrite("trim_quantile", &LossWeights::trim_quantile);

    py::class_<LossTerms>(m, "LossTerms")
        .def_readonly("pr", &LossTerms::pr)
        .def_readonly("d", &LossTerms::d)
        .def_readonly("e", &LossTerms::e)
        .def_readonly("sc", &LossTerms::sc)
        .def_readonly("tot", &LossTerms::tot)
        .def("__repr__", [](const LossTerms& lt) {
            return "LossTerms(pr=" + std::to_string(lt.pr) + ", d=" + std::to_string(lt.d) +
                   ", e=" + std::to_string(lt.e) + ", sc=" + std::to_string(lt.sc) +
                   ", tot=" + std::to_string(lt.tot) + ")";
        });

    py::class_<TailTrainConfig>(m, "TailTrainConfig")
        .def(py::init<>())
        .def_readwrite("stop_rel_improvement", &TailTrainConfig::stop_rel_improvement)
        .def_readwrite("stop_window", &TailTrainConfig::stop_window)
        .def_readwrite("warmup_epochs", &TailTrainConfig::warmup_epochs)
        .def_readwrite("anchor_epochs", &TailTrainConfig::anchor_epochs)
        .def_readwrite("anchor_w_d", &TailTrainConfig::anchor_w_d);

    py::class_<TailTrace>(m, "TailTrace")
        .def_readonly("aborted", &TailTrace::aborted)
        .def_readonly("abort_reason", &TailTrace::abort_reason)
        .def_readonly("epochs_run", &TailTrace::epochs_run)
        .def_property_readonly("per_epoch", [](const TailTrace& t) {
            py::list out;
            for (const LossTerms& lt : t.per_epoch) out.append(lt);
            return out;
        });

    py::class_<TailNet>(m, "TailNet")
        .def_property_readonly("dim", &TailNet::dim)
        .def_property_readonly("arch", &TailNet::arch)
        .def("forward", [](const TailNet& t, py::array_t<double> z) {
            return from_vec(t.forward(to_vec(z)));
        })
        .def("generate", [](const TailNet& t, long n, std::uint64_t seed) {
            return from_matrix(t.generate(n, seed));
        }, py::arg("n"), py::arg("seed"));

    m.def("init_tail", &init_tail, py::arg("density"), py::arg("mode"), py::arg("seed"),
          py::arg("random_cfg") = TailConfig{},
          "Build the tail generator from a trained density or at random.");

    m.def("loss_terms", [](const TailNet& tail, py::array_t<double> z, py::array_t<double> data,
                           const FlowModel& density, const LossWeights& w) {
        return loss_terms(tail, to_matrix(z), to_matrix(data), density, w);
    }, py::arg("tail"), py::arg("z_batch"), py::arg("data"), py::arg("density"), py::arg("weights"));

    m.def("train_tail", [](TailNet& tail, const FlowModel& density, py::array_t<double> data,
                           const LossWeights& w, const OptimizerConfig& opt,
                           const TailTrainConfig& tc) {
        return train_tail(tail, density, to_matrix(data), w, opt, tc);
    }, py::arg("tail"), py::arg("density"), py::arg("data"), py::arg("weights"), py::arg("opt"),
       py::arg("train_cfg") = TailTrainConfig{});

    // Clustering / proximity.
    py::class_<ProximityResult>(m, "ProximityResult")
        .def_readonly("cls", &ProximityResult::cls)
        .def_readonly("radius", &ProximityResult::radius)
        .def_readonly("floor", &ProximityResult::floor)
        .def_readonly("satisfied", &ProximityResult::satisfied)
        .def_readonly("margin", &ProximityResult::margin);

    py::enum_<FloorRule>(m, "FloorRule")
        .value("all_pairs", FloorRule::all_pairs)
        .value("shared_index", FloorRule::shared_index);

    m.def("assign_cluster", [](py::array_t<double> y, py::array_t<double> x,
                               py::array_t<long> labels, double p) {
        return assign_cluster(to_vec(y), to_dataset(x, labels), p);
    }, py::arg("y"), py::arg("x"), py::arg("labels"), py::arg("p") = 2.0);

    m.def("check_proximity", [](py::array_t<double> y, py::array_t<double> x,
                                py::array_t<long> labels, double p, FloorRule rule) {
        return check_proximity(to_vec(y), to_dataset(x, labels), p, rule);
    }, py::arg("y"), py::arg("x"), py::arg("labels"), py::arg("p") = 2.0,
       py::arg("rule") = FloorRule::all_pairs);

    // Scoring.
    py::class_<ScoreConfig>(m, "ScoreConfig")
        .def(py::init<>())
        .def_readwrite("epsilon", &ScoreConfig::epsilon)
        .def_readwrite("epsilon_quantile", &ScoreConfig::epsilon_quantile)
        .def_readwrite("alpha_density", &ScoreConfig::alpha_density)
        .def_readwrite("alpha_distance", &ScoreConfig::alpha_distance)
        .def_readwrite("p", &ScoreConfig::p);

    m.def("anomaly_score", [](py::array_t<double> x, const FlowModel& density,
                              py::array_t<double> ref, const ScoreConfig& cfg) {
        return anomaly_score(to_vec(x), density, to_matrix(ref), cfg);
    }, py::arg("x"), py::arg("density"), py::arg("ref_data"), py::arg("cfg") = ScoreConfig{});

    m.def("support_membership", [](py::array_t<double> x, const FlowModel& density,
                                   const ScoreConfig& cfg) {
        return support_membership(to_vec(x), density, cfg);
    }, py::arg("x"), py::arg("density"), py::arg("cfg"));

    m.def("epsilon_from_quantile", [](const FlowModel& density, py::array_t<double> data,
                                      double quantile) {
        return epsilon_from_quantile(density, to_matrix(data), quantile);
    }, py::arg("density"), py::arg("data"), py::arg("quantile") = 0.05);

    m.def("auroc", [](py::array_t<double> scores, py::array_t<int> labels) {
        std::vector<int> l(labels.data(), labels.data() + labels.shape(0));
        return auroc(to_vec(scores), l);
    }, py::arg("scores"), py::arg("labels"));

    m.def("auprc", [](py::array_t<double> scores, py::array_t<int> labels) {
        std::vector<int> l(labels.data(), labels.data() + labels.shape(0));
        return auprc(to_vec(scores), l);
    }, py::arg("scores"), py::arg("labels"));

    // Data utilities.
    m.def("tri_gauss", [](std::uint64_t seed, long n) {
        return dataset_to_py(generate(DistributionSpec::tri_gauss(seed), n));
    }, py::arg("seed"), py::arg("n") = 3000,
       "The reference three-component disjoint mixture, as (points, labels).");

    m.def("make_ood_shift", [](py::array_t<double> x, py::array_t<long> labels, double magnitude,
                               long n, std::uint64_t seed) {
        return from_matrix(make_ood(to_dataset(x, labels), OodMode::shift, magnitude, n, seed));
    }, py::arg("x"), py::arg("labels"), py::arg("magnitude"), py::arg("n") = 0,
       py::arg("seed") = 0);

    m.def("make_ood_box", [](py::array_t<double> x, py::array_t<long> labels, double magnitude,
                             long n, std::uint64_t seed) {
        return from_matrix(
            make_ood(to_dataset(x, labels), OodMode::uniform_box, magnitude, n, seed));
    }, py::arg("x"), py::arg("labels"), py::arg("magnitude"), py::arg("n") = 0,
       py::arg("seed") = 0);

    // Checkpoints.
    m.def("save_flow", &save_flow_checkpoint, py::arg("path"), py::arg("model"));
    m.def("load_flow", &load_flow_checkpoint, py::arg("path"));
    m.def("save_tail", &save_tail_checkpoint, py::arg("path"), py::arg("tail"));
    m.def("load_tail", &load_tail_checkpoint, py::arg("path"));
}
