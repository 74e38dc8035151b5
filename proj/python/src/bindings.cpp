#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "stik/config.hpp"
#include "stik/errors.hpp"
#include "stik/experiments.hpp"
#include "stik/problems.hpp"
#include "stik/random.hpp"
#include "stik/regparam.hpp"
#include "stik/superres.hpp"

namespace py = pybind11;
using namespace stik;

namespace {

ExperimentConfig make_config(const std::optional<std::string>& path, const py::dict& overrides) {
    ExperimentConfig cfg = path ? load_config(*path) : ExperimentConfig{};
    for (const auto& [key, value] : overrides) {
        std::string text;
        if (py::isinstance<py::bool_>(value))
            text = value.cast<bool>() ? "true" : "false";
        else
            text = py::str(value).cast<std::string>();
        set_config_value(cfg, key.cast<std::string>(), text);
    }
    validate_config(cfg);
    return cfg;
}

py::dict records_dict(const std::vector<IterationRecord>& recs) {
    const auto count = static_cast<Index>(recs.size());
    Eigen::Matrix<std::uint64_t, Eigen::Dynamic, 1> k(count);
    Eigen::Matrix<Index, Eigen::Dynamic, 1> tau(count);
    Vector inc(count), lam(count), res2(count), relerr(count), secs(count);
    std::vector<std::string> flags;
    for (Index i = 0; i < count; ++i) {
        const auto& r = recs[static_cast<std::size_t>(i)];
        k[i] = r.k;
        tau[i] = r.tau;
        inc[i] = r.increment;
        lam[i] = r.lambda_eff;
        res2[i] = r.res2;
        relerr[i] = r.relerr.value_or(std::numeric_limits<double>::quiet_NaN());
        secs[i] = r.seconds;
        flags.push_back(r.flag);
    }
    py::dict d;
    d["k"] = k;
    d["tau"] = tau;
    d["Lambda"] = inc;
    d["lambda_eff"] = lam;
    d["res2"] = res2;
    d["relerr"] = relerr;
    d["seconds"] = secs;
    d["flag"] = flags;
    return d;
}

py::dict result_dict(const ExperimentResult& res) {
    py::dict d;
    d["records"] = records_dict(res.run.records);
    d["x"] = res.run.x;
    d["final_relerr"] = res.final_relerr;
    d["final_lambda_eff"] = res.final_lambda_eff;
    d["warnings"] = res.run.warnings;
    return d;
}

InverseProblem dense_problem(const DenseMatrix& a, const Vector& b, const std::optional<DenseMatrix>& l) {
    InverseProblem p;
    p.A = make_dense(a);
    p.b = b;
    p.L = l ? make_dense(*l) : make_identity(a.cols());
    validate_problem(p);
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sampled Tikhonov iterations (C++ core)";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalBreakdown>(m, "NumericalBreakdown", PyExc_ArithmeticError);
    py::register_exception<SelectionFailed>(m, "SelectionFailed", PyExc_RuntimeError);

    m.def(
        "gen_test_problem",
        [](const std::string& name, Index n, const std::string& noise, double noise_value, std::uint64_t seed) {
            TestProblemSpec spec;
            spec.name = name;
            spec.n = n;
            spec.noise = parse_noise_mode(noise);
            spec.noise_value = noise_value;
            spec.seed = seed;
            const InverseProblem p = gen_test_problem(spec);
            py::dict d;
            d["A"] = p.A->to_dense();
            d["b"] = p.b;
            d["x_true"] = p.x_true;
            d["sigma2"] = p.sigma2;
            return d;
        },
        py::arg("name") = "gravity", py::arg("n") = 100, py::arg("noise") = "none", py::arg("noise_value") = 0.0,
        py::arg("seed") = 0);

    m.def(
        "tikhonov",
        [](const DenseMatrix& a, const Vector& b, double lam, const std::optional<DenseMatrix>& l) {
            return tikhonov_direct(dense_problem(a, b, l), lam);
        },
        py::arg("A"), py::arg("b"), py::arg("lam"), py::arg("L") = std::nullopt);

    m.def(
        "full_data_select",
        [](const DenseMatrix& a, const Vector& b, const std::string& method, std::optional<double> sigma2,
           std::optional<Vector> x_true, double gamma) {
            InverseProblem p = dense_problem(a, b, std::nullopt);
            p.sigma2 = sigma2;
            p.x_true = std::move(x_true);
            FullDataMethod fm;
            if (method == "dp") fm = FullDataMethod::dp;
            else if (method == "upre") fm = FullDataMethod::upre;
            else if (method == "gcv") fm = FullDataMethod::gcv;
            else if (method == "opt") fm = FullDataMethod::opt;
            else throw InvalidArgument("unknown full-data method '" + method + "'");
            const FullDataSelection s = full_data_select(fm, p, GridSpec{}, gamma);
            return py::make_tuple(s.lambda, s.objective, s.flag);
        },
        py::arg("A"), py::arg("b"), py::arg("method"), py::arg("sigma2") = std::nullopt,
        py::arg("x_true") = std::nullopt, py::arg("gamma") = 4.0);

    m.def(
        "run",
        [](const std::optional<std::string>& config, const py::dict& overrides) {
            const ExperimentConfig cfg = make_config(config, overrides);
            ExperimentResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(cfg);
            }
            return result_dict(res);
        },
        py::arg("config") = std::nullopt, py::arg("overrides") = py::dict());

    m.def(
        "superres_run",
        [](const std::optional<std::string>& config, const py::dict& overrides) {
            const ExperimentConfig cfg = make_config(config, overrides);
            LoadedProblem loaded;
            ExperimentResult res;
            {
                py::gil_scoped_release release;
                loaded = load_superres_problem(cfg, cfg.run.seed);
                res = run_loaded(cfg, loaded, cfg.run.seed);
            }
            py::dict d = result_dict(res);
            d["image_side"] = loaded.image_side;
            return d;
        },
        py::arg("config") = std::nullopt, py::arg("overrides") = py::dict());

    m.def(
        "select_param",
        [](const std::optional<std::string>& config, const py::dict& overrides, const std::string& method,
           std::uint64_t steps) {
            const ExperimentConfig cfg = make_config(config, overrides);
            const ParamSelection s = select_param(cfg, parse_selection_method(method), steps);
            py::dict d;
            d["k"] = s.k;
            d["tau"] = s.tau;
            d["Lambda"] = s.result.increment;
            d["lambda"] = s.result.lambda_total;
            d["objective"] = s.result.objective;
            d["evaluations"] = s.result.evaluations;
            d["flag"] = s.result.flag;
            return d;
        },
        py::arg("config") = std::nullopt, py::arg("overrides") = py::dict(), py::arg("method") = "sgcv",
        py::arg("steps") = 0);

    m.def("config_keys", &config_keys);
    m.def(
        "default_config", [] { return serialize_config(ExperimentConfig{}); },
        "Default configuration in INI form.");

    m.def(
        "exact_trace",
        [](const DenseMatrix& a) { return exact_trace([&](const Vector& v) { return Vector(a * v); }, a.cols()); },
        py::arg("M"));
    m.def(
        "hutchinson_trace",
        [](const DenseMatrix& a, int probes, std::uint64_t seed) {
            Rng rng(seed);
            const TraceEstimate t =
                hutchinson_trace([&](const Vector& v) { return Vector(a * v); }, a.cols(), probes, rng);
            return py::make_tuple(t.mean, t.variance);
        },
        py::arg("M"), py::arg("probes") = 1, py::arg("seed") = 0);

    m.def(
        "toy_figure",
        [](std::uint64_t seed, long epochs, double lam) {
            py::list out;
            for (const auto& p : toy_figure(seed, epochs, lam))
                out.append(py::make_tuple(p.series, p.epoch, p.lambda, p.x1, p.x2));
            return out;
        },
        py::arg("seed") = 0, py::arg("epochs") = 200, py::arg("lam") = 0.2);

    m.def("synthetic_moon", &synthetic_moon, py::arg("n"));
    m.def(
        "restrict",
        [](const Vector& x, Index n, Index ell) { return make_restriction_op(n, ell)->apply(x); }, py::arg("x"),
        py::arg("n"), py::arg("ell"));
    m.def(
        "restrict_adjoint",
        [](const Vector& y, Index n, Index ell) { return make_restriction_op(n, ell)->apply_adjoint(y); },
        py::arg("y"), py::arg("n"), py::arg("ell"));
    m.def(
        "affine",
        [](const Vector& x, Index n, double dx, double dy, double angle) {
            return make_affine_op(n, dx, dy, angle)->apply(x);
        },
        py::arg("x"), py::arg("n"), py::arg("dx"), py::arg("dy"), py::arg("angle"));
    m.def(
        "affine_adjoint",
        [](const Vector& y, Index n, double dx, double dy, double angle) {
            return make_affine_op(n, dx, dy, angle)->apply_adjoint(y);
        },
        py::arg("y"), py::arg("n"), py::arg("dx"), py::arg("dy"), py::arg("angle"));
}
