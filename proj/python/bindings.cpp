#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mdma/analytic.hpp"
#include "mdma/error.hpp"
#include "mdma/experiments.hpp"
#include "mdma/io.hpp"
#include "mdma/markov.hpp"
#include "mdma/simulator.hpp"

namespace py = pybind11;
using namespace mdma;

namespace {

// Configs cross the boundary as JSON text; the Python wrapper does the
// dict <-> str conversion.
Setup setup_of(const std::string& config) { return config.empty() ? default_paper_setup() : parse_setup(config); }

AnalyticOptions analytic_of(bool perturb_ties, bool numerical) {
    AnalyticOptions o;
    o.ties = perturb_ties ? TiePolicy::Perturb : TiePolicy::Error;
    o.numerical_relay_sum = numerical;
    return o;
}

py::dict analysis_dict(const Setup& setup, const MdmaAnalysis& a) {
    const auto& o = a.outages;
    py::dict steps;
    steps["pIS1s1"] = o.op_pIS1s1;
    steps["pIS1s2"] = o.op_pIS1s2;
    steps["pIIS1s1"] = o.op_pIIS1s1;
    steps["pIIS1s2"] = o.op_pIIS1s2;
    steps["pIIS2s1"] = o.op_pIIS2s1;
    steps["pIIS2s2"] = o.op_pIIS2s2;
    steps["empty_set_prob_s1"] = o.empty_set_prob_s1;
    steps["empty_set_prob_s2"] = o.empty_set_prob_s2;
    py::dict d;
    d["beta_s"] = setup.config.beta_s();
    d["beta_p"] = setup.config.beta_p();
    d["gamma_th"] = setup.config.gamma_th();
    d["step_outages"] = steps;
    d["overall_op"] = a.solution.overall_op;
    d["slot_cost"] = a.solution.slot_cost;
    d["efficiency"] = a.solution.efficiency;
    d["stationary"] = a.solution.stationary;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MDMA cooperative relay network: closed form and simulation";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "MdmaError", PyExc_ValueError);
    py::register_exception<TieError>(m, "TieError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<GeometryError>(m, "GeometryError", base.ptr());

    m.def("default_config", [] { return setup_to_json(default_paper_setup()); });
    m.def("normalize_config", [](const std::string& config) { return setup_to_json(setup_of(config)); },
          py::arg("config"));

    m.def(
        "analyze",
        [](const std::string& config, bool perturb_ties, bool numerical) {
            const Setup s = setup_of(config);
            const MdmaAnalysis a = [&] {
                py::gil_scoped_release nogil;
                return analyze_mdma(s.topology, s.config, analytic_of(perturb_ties, numerical));
            }();
            return analysis_dict(s, a);
        },
        py::arg("config") = "", py::arg("perturb_ties") = false, py::arg("numerical") = false);

    m.def(
        "dump_chain",
        [](const std::string& config, bool perturb_ties, bool literal_chain) {
            const Setup s = setup_of(config);
            ChainOptions c;
            c.literal_phase_ii_s1_wrap = literal_chain;
            const MdmaAnalysis a = analyze_mdma(s.topology, s.config, analytic_of(perturb_ties, false), c);
            return chain_to_json(a.chain, a.solution.stationary, a.outages, &a.solution);
        },
        py::arg("config") = "", py::arg("perturb_ties") = false, py::arg("literal_chain") = false);

    m.def(
        "simulate",
        [](const std::string& scheme, const std::string& config, std::uint64_t trials, std::uint64_t seed,
           unsigned threads, bool cooperation, std::size_t trace_cap) {
            const Setup s = setup_of(config);
            const Scheme sc = parse_scheme(scheme);
            SimOptions o;
            o.slots = trials;
            o.seed = seed;
            o.threads = threads;
            o.relay_cooperation = cooperation;
            o.trace_cap = trace_cap;
            SimEstimate e;
            {
                py::gil_scoped_release nogil;
                e = simulate(sc, s.topology, s.config, o);
            }
            std::ostringstream trace;
            if (trace_cap > 0) write_trace_csv(trace, e.trace);
            return py::make_tuple(estimate_to_json(e), trace.str());
        },
        py::arg("scheme") = "mdma", py::arg("config") = "", py::arg("trials") = 1'000'000,
        py::arg("seed") = 1, py::arg("threads") = 0, py::arg("cooperation") = true, py::arg("trace_cap") = 0);

    m.def(
        "sweep",
        [](const std::string& spec_json, const std::string& config, bool analytic_only, unsigned threads) {
            const SweepSpec spec = parse_sweep_spec(spec_json);
            const Setup s = setup_of(config);
            SweepOptions o;
            o.simulate = !analytic_only;
            o.threads = threads;
            std::vector<ResultRow> rows;
            {
                py::gil_scoped_release nogil;
                rows = run_sweep(spec, s, o);
            }
            std::ostringstream csv;
            write_sweep_csv(csv, spec, rows);
            return py::make_tuple(csv.str(), sweep_manifest_json(spec, s, ""));
        },
        py::arg("spec"), py::arg("config") = "", py::arg("analytic_only") = false, py::arg("threads") = 0);

    m.def(
        "validate",
        [](const std::string& config, std::uint64_t trials, std::uint64_t seed, unsigned threads) {
            const Setup s = setup_of(config);
            ValidationOptions o;
            o.trials = trials;
            o.seed = seed;
            o.threads = threads;
            ValidationReport r;
            {
                py::gil_scoped_release nogil;
                r = validate(s, o);
            }
            return validation_to_json(r);
        },
        py::arg("config") = "", py::arg("trials") = 1'000'000, py::arg("seed") = 1, py::arg("threads") = 0);

    m.def(
        "relay_sum_cdf",
        [](const std::vector<std::pair<double, double>>& gates, const std::vector<double>& x, bool perturb_ties) {
            std::vector<GatedExponential> g;
            for (const auto& [gate, rate] : gates) g.push_back({gate, rate});
            const DefectiveCdf cdf = relay_sum_cdf(g, perturb_ties ? TiePolicy::Perturb : TiePolicy::Error);
            std::vector<double> out;
            out.reserve(x.size());
            for (double v : x) out.push_back(cdf(v));
            return out;
        },
        "Defective CDF of the relay sum for (gate probability, rate) pairs.", py::arg("gates"), py::arg("x"),
        py::arg("perturb_ties") = false);
}
