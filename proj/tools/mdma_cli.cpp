// mdma: closed-form analysis, simulation and sweeps for the two-source relay network.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdma/error.hpp"
#include "mdma/experiments.hpp"
#include "mdma/io.hpp"
#include "mdma/markov.hpp"
#include "mdma/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SetupFlags {
    std::string config;
    bool paper_defaults = false;
    std::optional<double> power;
    std::optional<double> eta;
    std::optional<int> granularity;
    std::optional<std::size_t> relays;
    bool noiseless = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON configuration file");
        app->add_flag("--paper-defaults", paper_defaults, "Use the built-in default network (the default without --config)");
        app->add_option("--power", power, "Transmit power in dBm");
        app->add_option("--eta", eta, "Shared-information ratio in [0, 1]");
        app->add_option("--granularity", granularity, "Bins over [0, threshold] for the step-2 pipeline");
        app->add_option("--relays", relays, "Replace the relays with an evenly spaced column of this size");
        app->add_flag("--noiseless", noiseless, "Noise power of -inf dBm");
    }

    mdma::Setup resolve() const {
        if (!config.empty() && paper_defaults) throw mdma::ConfigError("--config and --paper-defaults are exclusive");
        mdma::Setup s = config.empty() ? mdma::default_paper_setup() : mdma::load_setup_file(config);
        if (power) s.config.power_dbm = *power;
        if (eta) s.config.eta = *eta;
        if (granularity) s.config.granularity = *granularity;
        if (relays) s.topology.relays = mdma::column_relays(*relays);
        if (noiseless) s.config.noise_dbm = -std::numeric_limits<double>::infinity();
        s.topology.validate();
        s.config.validate();
        return s;
    }
};

struct AnalyticFlags {
    bool perturb_ties = false;
    bool numerical = false;
    bool literal_chain = false;

    void attach(CLI::App* app) {
        app->add_flag("--perturb-ties", perturb_ties, "Split tied link rates instead of failing");
        app->add_flag("--numerical", numerical, "Use the numerical relay-sum CDF (any relay count)");
        app->add_flag("--literal-chain", literal_chain, "Wrap the last Phase II S1 success back into Phase II S1");
    }
    mdma::AnalyticOptions analytic() const {
        mdma::AnalyticOptions o;
        o.ties = perturb_ties ? mdma::TiePolicy::Perturb : mdma::TiePolicy::Error;
        o.numerical_relay_sum = numerical;
        return o;
    }
    mdma::ChainOptions chain() const { return {literal_chain}; }
};

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text << '\n';
        return;
    }
    std::ofstream f(out);
    if (!f) throw mdma::ConfigError("cannot write " + out);
    f << text << '\n';
}

json analysis_json(const mdma::Setup& setup, const mdma::MdmaAnalysis& a) {
    const auto& o = a.outages;
    return {{"beta_s", setup.config.beta_s()},
            {"beta_p", setup.config.beta_p()},
            {"gamma_th", setup.config.gamma_th()},
            {"step_outages",
             {{"pIS1s1", o.op_pIS1s1},
              {"pIS1s2", o.op_pIS1s2},
              {"pIIS1s1", o.op_pIIS1s1},
              {"pIIS1s2", o.op_pIIS1s2},
              {"pIIS2s1", o.op_pIIS2s1},
              {"pIIS2s2", o.op_pIIS2s2},
              {"empty_set_prob_s1", o.empty_set_prob_s1},
              {"empty_set_prob_s2", o.empty_set_prob_s2}}},
            {"overall_op", a.solution.overall_op},
            {"slot_cost", a.solution.slot_cost},
            {"efficiency", a.solution.efficiency}};
}

mdma::SicOrder parse_sic(const std::string& s) {
    if (s == "mean") return mdma::SicOrder::MeanPower;
    if (s == "instantaneous") return mdma::SicOrder::Instantaneous;
    throw mdma::ConfigError("--sic-order must be 'mean' or 'instantaneous'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MDMA two-source cooperative relay network: analysis and simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mdma::kVersion);

    // analyze
    SetupFlags a_setup;
    AnalyticFlags a_opts;
    std::string a_out;
    auto* analyze = app.add_subcommand("analyze", "Closed-form outage, slot cost and efficiency");
    a_setup.attach(analyze);
    a_opts.attach(analyze);
    analyze->add_option("--out", a_out, "Output JSON (default stdout)");

    // simulate
    SetupFlags s_setup;
    AnalyticFlags s_opts;
    std::string s_out, s_trace, s_scheme = "mdma", s_sic = "mean";
    std::uint64_t s_seed = 1, s_trials = 1'000'000;
    std::size_t s_trace_cap = 10'000;
    unsigned s_threads = 0;
    bool s_no_coop = false;
    double s_split = 0.5;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of one scheme at one point");
    s_setup.attach(simulate);
    s_opts.attach(simulate);
    simulate->add_option("--scheme", s_scheme, "mdma, tdma, fdma or noma");
    simulate->add_option("--seed", s_seed, "Base seed");
    simulate->add_option("--trials", s_trials, "Slots to simulate");
    simulate->add_option("--threads", s_threads, "Worker threads (0: all cores)");
    simulate->add_option("--out", s_out, "Output JSON (default stdout)");
    simulate->add_option("--trace-out", s_trace, "Per-slot trace CSV");
    simulate->add_option("--trace-cap", s_trace_cap, "Slots kept in the trace");
    simulate->add_flag("--no-cooperation", s_no_coop, "Disable relaying (direct link only)");
    simulate->add_option("--sic-order", s_sic, "NOMA decoding order: mean or instantaneous");
    simulate->add_option("--noma-split", s_split, "Share of the power given to S1 under NOMA");

    // sweep
    SetupFlags w_setup;
    AnalyticFlags w_opts;
    std::string w_spec, w_out = "sweep";
    std::optional<std::uint64_t> w_seed, w_trials;
    std::string w_scheme;
    unsigned w_threads = 0;
    bool w_draft = false, w_analytic_only = false;
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep to CSV plus a JSON manifest");
    w_setup.attach(sweep);
    w_opts.attach(sweep);
    sweep->add_option("spec", w_spec, "Sweep file (JSON); default: power grid 0-30 dBm, all schemes");
    sweep->add_option("--seed", w_seed, "Override the sweep seed");
    sweep->add_option("--trials", w_trials, "Override slots per point");
    sweep->add_option("--scheme", w_scheme, "Comma-separated scheme list, e.g. mdma@0.5,noma");
    sweep->add_option("--threads", w_threads, "Concurrent grid points (0: all cores)");
    sweep->add_option("--out", w_out, "Output prefix: writes PREFIX.csv and PREFIX.manifest.json");
    sweep->add_flag("--draft", w_draft, "Allow fewer slots per point than a published sweep needs");
    sweep->add_flag("--analytic-only", w_analytic_only, "Skip simulation");

    // validate
    SetupFlags v_setup;
    AnalyticFlags v_opts;
    std::string v_out;
    std::uint64_t v_seed = 1, v_trials = 1'000'000;
    unsigned v_threads = 0;
    auto* validate = app.add_subcommand("validate", "Cross-check the closed form against simulation");
    v_setup.attach(validate);
    v_opts.attach(validate);
    validate->add_option("--seed", v_seed, "Base seed");
    validate->add_option("--trials", v_trials, "Samples per Monte Carlo check");
    validate->add_option("--threads", v_threads, "Worker threads (0: all cores)");
    validate->add_option("--out", v_out, "Output JSON (default stdout)");

    // dump-chain
    SetupFlags d_setup;
    AnalyticFlags d_opts;
    std::string d_out;
    auto* dump = app.add_subcommand("dump-chain", "States, transitions and stationary vector as JSON");
    d_setup.attach(dump);
    d_opts.attach(dump);
    dump->add_option("--out", d_out, "Output JSON (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) {
            const mdma::Setup setup = a_setup.resolve();
            const auto a = mdma::analyze_mdma(setup.topology, setup.config, a_opts.analytic(), a_opts.chain());
            emit(analysis_json(setup, a).dump(2), a_out);
        } else if (*simulate) {
            const mdma::Setup setup = s_setup.resolve();
            mdma::SimOptions o;
            o.slots = s_trials;
            o.seed = s_seed;
            o.threads = s_threads;
            o.trace_cap = s_trace.empty() ? 0 : s_trace_cap;
            o.relay_cooperation = !s_no_coop;
            o.noma_power_split = s_split;
            o.sic_order = parse_sic(s_sic);
            o.chain = s_opts.chain();
            const mdma::Scheme scheme = mdma::parse_scheme(s_scheme);
            const mdma::SimEstimate est = mdma::simulate(scheme, setup.topology, setup.config, o);
            json summary = json::parse(mdma::estimate_to_json(est));
            summary["seed"] = s_seed;
            summary["version"] = mdma::kVersion;
            if (scheme == mdma::Scheme::MDMA && !s_no_coop) {
                try {
                    summary["analytic"] = analysis_json(
                        setup, mdma::analyze_mdma(setup.topology, setup.config, s_opts.analytic(), s_opts.chain()));
                } catch (const mdma::Error& e) {
                    summary["analytic_error"] = e.what();
                }
            }
            emit(summary.dump(2), s_out);
            if (!s_trace.empty()) {
                std::ofstream f(s_trace);
                if (!f) throw mdma::ConfigError("cannot write " + s_trace);
                mdma::write_trace_csv(f, est.trace);
            }
        } else if (*sweep) {
            const mdma::Setup setup = w_setup.resolve();
            mdma::SweepSpec spec = mdma::default_sweep_spec();
            if (!w_spec.empty()) {
                std::ifstream in(w_spec);
                if (!in) throw mdma::ConfigError("cannot open sweep file " + w_spec);
                std::stringstream buf;
                buf << in.rdbuf();
                spec = mdma::parse_sweep_spec(buf.str());
            }
            if (w_seed) spec.seed = *w_seed;
            if (w_trials) spec.trials = *w_trials;
            if (!w_scheme.empty()) {
                spec.schemes.clear();
                std::stringstream ss(w_scheme);
                for (std::string item; std::getline(ss, item, ',');) spec.schemes.push_back(mdma::parse_variant(item));
            }
            spec.validate(!w_draft && !w_analytic_only);
            mdma::SweepOptions so;
            so.threads = w_threads;
            so.analytic = w_opts.analytic();
            so.sim.chain = w_opts.chain();
            so.simulate = !w_analytic_only;
            const auto rows = mdma::run_sweep(spec, setup, so);

            const fs::path csv = w_out + ".csv";
            const fs::path manifest = w_out + ".manifest.json";
            if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
            std::ofstream f(csv);
            if (!f) throw mdma::ConfigError("cannot write " + csv.string());
            mdma::write_sweep_csv(f, spec, rows);
            emit(mdma::sweep_manifest_json(spec, setup, csv.filename().string()), manifest.string());
            std::size_t failed = 0;
            for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
            std::cerr << "wrote " << rows.size() << " rows to " << csv.string() << " (" << failed
                      << " with errors)\n";
        } else if (*validate) {
            const mdma::Setup setup = v_setup.resolve();
            mdma::ValidationOptions o;
            o.trials = v_trials;
            o.seed = v_seed;
            o.threads = v_threads;
            o.analytic = v_opts.analytic();
            const auto report = mdma::validate(setup, o);
            emit(mdma::validation_to_json(report), v_out);
            for (const auto& c : report.checks) {
                std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << "  deviation=" << c.deviation
                          << " tolerance=" << c.tolerance << '\n';
            }
            return report.passed() ? 0 : 1;
        } else if (*dump) {
            const mdma::Setup setup = d_setup.resolve();
            const auto a = mdma::analyze_mdma(setup.topology, setup.config, d_opts.analytic(), d_opts.chain());
            emit(mdma::chain_to_json(a.chain, a.solution.stationary, a.outages, &a.solution), d_out);
        }
    } catch (const mdma::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
