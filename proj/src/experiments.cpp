#include "mdma/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "mdma/error.hpp"
#include "mdma/io.hpp"

namespace mdma {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v && std::isfinite(*v) ? num(*v) : std::string(); }

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

void append_error(std::string& into, const std::string& what) {
    if (!into.empty()) into += "; ";
    into += what;
}

}  // namespace

const char* parameter_name(SweepParameter p) {
    switch (p) {
        case SweepParameter::PowerDbm: return "power_dbm";
        case SweepParameter::Eta: return "eta";
        case SweepParameter::Granularity: return "granularity";
        case SweepParameter::RelayCount: return "relay_count";
    }
    return "?";
}

SweepParameter parse_parameter(std::string_view text) {
    const std::string t = lower(text);
    if (t == "power_dbm" || t == "power") return SweepParameter::PowerDbm;
    if (t == "eta") return SweepParameter::Eta;
    if (t == "granularity") return SweepParameter::Granularity;
    if (t == "relay_count" || t == "relays") return SweepParameter::RelayCount;
    throw ConfigError("unknown sweep parameter '" + std::string(text) + "'");
}

std::string SchemeVariant::label() const {
    std::string name = scheme_name(scheme);
    if (scheme == Scheme::MDMA && eta) name += "@" + num(*eta);
    return name;
}

SchemeVariant parse_variant(std::string_view text) {
    const auto at = text.find('@');
    SchemeVariant v;
    v.scheme = parse_scheme(text.substr(0, at));
    if (at != std::string_view::npos) {
        if (v.scheme != Scheme::MDMA) throw ConfigError("only MDMA takes an eta suffix");
        const std::string tail(text.substr(at + 1));
        std::size_t used = 0;
        double eta = 0.0;
        try {
            eta = std::stod(tail, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tail.size() || tail.empty() || !(eta >= 0.0 && eta <= 1.0)) {
            throw ConfigError("bad eta in scheme '" + std::string(text) + "'");
        }
        v.eta = eta;
    }
    return v;
}

void SweepSpec::validate(bool published) const {
    if (values.empty()) throw ConfigError("sweep grid is empty");
    if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep grid must be sorted ascending");
    for (double v : values) {
        if (!std::isfinite(v)) throw ConfigError("sweep grid values must be finite");
    }
    if (schemes.empty()) throw ConfigError("sweep needs at least one scheme");
    if (trials == 0) throw ConfigError("trials must be positive");
    if (published && trials < kPublishedMinTrials) {
        throw ConfigError("published sweeps need at least " + std::to_string(kPublishedMinTrials) + " trials per point");
    }
}

std::vector<double> default_power_grid() {
    std::vector<double> g;
    for (int p = 0; p <= 30; p += 2) g.push_back(p);
    return g;
}

SweepSpec default_sweep_spec() {
    SweepSpec s;
    s.values = default_power_grid();
    s.schemes = {parse_variant("mdma@0.5"), parse_variant("mdma@0.7"), parse_variant("mdma@0.9"),
                 parse_variant("tdma"),     parse_variant("fdma"),     parse_variant("noma")};
    return s;
}

SweepSpec parse_sweep_spec(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("sweep file is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("sweep file must be a JSON object");
    for (const auto& [key, value] : root.items()) {
        if (key != "parameter" && key != "values" && key != "schemes" && key != "trials" && key != "seed") {
            throw ConfigError("unknown key '" + key + "' in sweep file");
        }
    }
    SweepSpec spec = default_sweep_spec();
    try {
        if (root.contains("parameter")) spec.parameter = parse_parameter(root.at("parameter").get<std::string>());
        if (root.contains("values")) {
            const json& v = root.at("values");
            spec.values.clear();
            if (v.is_array()) {
                for (const auto& x : v) spec.values.push_back(x.get<double>());
            } else if (v.is_object()) {
                const double start = v.at("start").get<double>();
                const double stop = v.at("stop").get<double>();
                const double step = v.at("step").get<double>();
                if (!(step > 0.0)) throw ConfigError("grid step must be positive");
                const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
                for (long k = 0; k <= n; ++k) spec.values.push_back(start + static_cast<double>(k) * step);
            } else {
                throw ConfigError("values must be a list or a {start, stop, step} range");
            }
        } else if (spec.parameter != SweepParameter::PowerDbm) {
            throw ConfigError("values are required for this sweep parameter");
        }
        if (root.contains("schemes")) {
            spec.schemes.clear();
            for (const auto& s : root.at("schemes")) spec.schemes.push_back(parse_variant(s.get<std::string>()));
        }
        if (root.contains("trials")) spec.trials = root.at("trials").get<std::uint64_t>();
        if (root.contains("seed")) spec.seed = root.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed sweep file: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string sweep_spec_to_json(const SweepSpec& spec) {
    json schemes = json::array();
    for (const auto& s : spec.schemes) schemes.push_back(lower(s.label()));
    json root = {{"parameter", parameter_name(spec.parameter)},
                 {"values", spec.values},
                 {"schemes", schemes},
                 {"trials", spec.trials},
                 {"seed", spec.seed}};
    return root.dump(2);
}

Setup apply_parameter(const Setup& setup, SweepParameter parameter, double value) {
    Setup s = setup;
    switch (parameter) {
        case SweepParameter::PowerDbm: s.config.power_dbm = value; break;
        case SweepParameter::Eta: s.config.eta = value; break;
        case SweepParameter::Granularity:
            if (value != std::floor(value) || value < 1.0) throw ConfigError("granularity must be a positive integer");
            s.config.granularity = static_cast<int>(value);
            break;
        case SweepParameter::RelayCount:
            if (value != std::floor(value) || value < 1.0) throw ConfigError("relay count must be a positive integer");
            s.topology.relays = column_relays(static_cast<std::size_t>(value));
            break;
    }
    return s;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const Setup& setup, const SweepOptions& options) {
    spec.validate();
    const std::size_t n_schemes = spec.schemes.size();
    std::vector<ResultRow> rows(spec.values.size() * n_schemes);

    unsigned point_threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    SimOptions sim = options.sim;
    sim.slots = spec.trials;
    if (point_threads > 1) sim.threads = 1;

    parallel_for(spec.values.size(), point_threads, [&](std::size_t p) {
        const std::uint64_t point_seed = derive_seed(spec.seed, p);
        for (std::size_t k = 0; k < n_schemes; ++k) {
            const SchemeVariant& variant = spec.schemes[k];
            ResultRow& row = rows[p * n_schemes + k];
            row.scheme = variant.label();
            row.value = spec.values[p];
            row.seed = derive_seed(point_seed, k);

            Setup point;
            try {
                point = apply_parameter(setup, spec.parameter, spec.values[p]);
                if (variant.eta) point.config.eta = *variant.eta;
                point.topology.validate();
                point.config.validate();
            } catch (const Error& e) {
                row.error = e.what();
                continue;
            }

            if (variant.scheme == Scheme::MDMA) {
                try {
                    const MdmaAnalysis a = analyze_mdma(point.topology, point.config, options.analytic, sim.chain);
                    row.analytic_op = a.solution.overall_op;
                    row.analytic_tc = a.solution.slot_cost;
                    row.analytic_phi = a.solution.efficiency;
                } catch (const Error& e) {
                    append_error(row.error, std::string("analytic: ") + e.what());
                }
            }
            if (!options.simulate) continue;
            try {
                SimOptions o = sim;
                o.seed = row.seed;
                o.trace_cap = 0;
                const SimEstimate est = simulate(variant.scheme, point.topology, point.config, o);
                row.sim_op = est.overall_op();
                row.sim_op_stderr = est.overall_op_stderr();
                row.sim_tc = est.slot_cost();
                row.sim_tc_stderr = est.slot_cost_stderr();
                row.sim_phi = est.efficiency();
                row.sim_phi_stderr = est.efficiency_stderr();
                row.sim_slots_per_pair = est.slots_per_pair();
            } catch (const Error& e) {
                append_error(row.error, std::string("simulation: ") + e.what());
            }
        }
    });
    return rows;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<ResultRow>& rows) {
    out << "scheme," << parameter_name(spec.parameter)
        << ",seed,analytic_op,analytic_tc,analytic_phi,sim_op,sim_op_stderr,sim_tc,sim_tc_stderr,sim_phi,"
           "sim_phi_stderr,sim_slots_per_pair,error\n";
    for (const auto& r : rows) {
        out << r.scheme << ',' << num(r.value) << ',' << r.seed << ',' << opt(r.analytic_op) << ','
            << opt(r.analytic_tc) << ',' << opt(r.analytic_phi) << ',' << opt(r.sim_op) << ','
            << opt(r.sim_op_stderr) << ',' << opt(r.sim_tc) << ',' << opt(r.sim_tc_stderr) << ','
            << opt(r.sim_phi) << ',' << opt(r.sim_phi_stderr) << ',' << opt(r.sim_slots_per_pair) << ','
            << csv_quote(r.error) << '\n';
    }
}

std::string config_hash(const SweepSpec& spec, const Setup& setup) {
    return fnv1a_hex(setup_to_json(setup) + "\n" + sweep_spec_to_json(spec));
}

std::string sweep_manifest_json(const SweepSpec& spec, const Setup& setup, const std::string& csv_name) {
    json root = {{"config_hash", config_hash(spec, setup)},
                 {"seed", spec.seed},
                 {"trials", spec.trials},
                 {"version", kVersion},
                 {"parameter", parameter_name(spec.parameter)},
                 {"csv", csv_name},
                 {"spec", json::parse(sweep_spec_to_json(spec))},
                 {"setup", json::parse(setup_to_json(setup))}};
    return root.dump(2);
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

Proportion conditional_step2_monte_carlo(const LinkRates& rates, double gamma_th, Source source,
                                         std::uint64_t trials, std::uint64_t seed) {
    Proportion out;
    const double lam = rates.direct(source).rate_lambda;
    const double direct_mass = -std::expm1(-lam * gamma_th);
    if (!(direct_mass > 0.0)) return out;  // the direct link never fails

    const auto& to_relays = rates.to_relays(source);
    const std::size_t m = to_relays.size();
    std::vector<double> gate(m);
    double empty = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        gate[i] = -std::expm1(-to_relays[i].rate_lambda * gamma_th);
        empty *= gate[i];
    }
    if (empty > 1.0 - 1e-9) return out;  // a nonempty decode set is (numerically) impossible

    RngStream rng(seed);
    for (std::uint64_t t = 0; t < trials; ++t) {
        const double x = -std::log1p(-rng.uniform() * direct_mass) / lam;
        double sum = x;
        bool any = false;
        while (!any) {
            sum = x;
            for (std::size_t i = 0; i < m; ++i) {
                if (rng.uniform() > gate[i]) {
                    any = true;
                    sum += rng.exponential(rates.rd[i].rate_lambda);
                }
            }
        }
        ++out.trials;
        if (sum < gamma_th) ++out.hits;
    }
    return out;
}

namespace {

ValidationCheck make_check(std::string name, double deviation, double tolerance, std::string detail = {}) {
    ValidationCheck c;
    c.name = std::move(name);
    c.deviation = deviation;
    c.tolerance = tolerance;
    c.passed = std::isfinite(deviation) && deviation <= tolerance;
    c.detail = std::move(detail);
    return c;
}

// 3 sigma under the larger of the hypothesised and the observed binomial spread.
ValidationCheck proportion_check(std::string name, double expected, const Proportion& observed) {
    const double n = static_cast<double>(observed.trials);
    const double p0 = std::clamp(expected, 0.0, 1.0);
    const double sigma = std::max(std::sqrt(p0 * (1.0 - p0) / n), observed.standard_error());
    ValidationCheck c = make_check(std::move(name), std::abs(observed.estimate() - expected), 3.0 * sigma,
                                   "expected " + num(expected) + ", observed " + num(observed.estimate()) + " over " +
                                       std::to_string(observed.trials));
    c.stochastic = true;
    return c;
}

const char* source_tag(Source s) { return s == Source::S1 ? "s1" : "s2"; }

}  // namespace

ValidationReport validate(const Setup& setup, const ValidationOptions& options) {
    ValidationReport report;
    auto guard = [&](const std::string& name, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            ValidationCheck c;
            c.name = name;
            c.passed = false;
            c.deviation = std::numeric_limits<double>::quiet_NaN();
            c.detail = e.what();
            report.checks.push_back(std::move(c));
        }
    };

    const NetworkTopology& topo = setup.topology;
    const SystemConfig& cfg = setup.config;
    const double gth = cfg.gamma_th();
    const std::uint64_t trials = std::max<std::uint64_t>(options.trials, 1);

    LinkRates rates;
    guard("setup", [&] {
        topo.validate();
        cfg.validate();
        rates = link_rates(topo, cfg);
    });
    if (!report.checks.empty()) return report;

    std::uint64_t stream = 0;
    for (Source src : {Source::S1, Source::S2}) {
        const std::string tag = source_tag(src);
        const auto gates = relay_paths(rates, gth, src);

        guard("relay_sum_cdf_vs_numerical_" + tag, [&] {
            if (gates.size() > kMaxClosedFormRelays) {
                ValidationCheck c = make_check("relay_sum_cdf_vs_numerical_" + tag, 0.0, 0.0,
                                               "skipped: too many relays for the subset expansion");
                report.checks.push_back(c);
                return;
            }
            const DefectiveCdf exact = relay_sum_cdf(gates, options.analytic.ties);
            const double gmax = 4.0 * gth;
            const NumericalRelaySumCdf numeric(gates, gmax, std::size_t{1} << 16);
            double worst = 0.0;
            for (int k = 1; k <= 64; ++k) {
                const double g = gmax * k / 64.0;
                worst = std::max(worst, std::abs(exact(g) - numeric(g)));
            }
            report.checks.push_back(make_check("relay_sum_cdf_vs_numerical_" + tag, worst, 1e-6));
        });

        guard("direct_outage_vs_mc_" + tag, [&] {
            RngStream rng(derive_seed(options.seed, stream++));
            Proportion p;
            const LinkParam link = rates.direct(src);
            for (std::uint64_t t = 0; t < trials; ++t) {
                ++p.trials;
                if (draw_link_snr(link, rng) < gth) ++p.hits;
            }
            report.checks.push_back(proportion_check("direct_outage_vs_mc_" + tag, direct_outage(link, gth), p));
        });

        guard("empty_decode_set_vs_mc_" + tag, [&] {
            RngStream rng(derive_seed(options.seed, stream++));
            Proportion p;
            const auto& links = rates.to_relays(src);
            double expected = 1.0;
            for (const auto& g : gates) expected *= g.gate_prob;
            for (std::uint64_t t = 0; t < trials; ++t) {
                bool empty = true;
                for (const auto& l : links) empty = empty && draw_link_snr(l, rng) < gth;
                ++p.trials;
                if (empty) ++p.hits;
            }
            report.checks.push_back(proportion_check("empty_decode_set_vs_mc_" + tag, expected, p));
        });

        guard("step2_outage_vs_conditional_mc_" + tag, [&] {
            const SourceOutages so = source_outages(rates, gth, cfg.granularity, src, options.analytic);
            const Proportion p =
                conditional_step2_monte_carlo(rates, gth, src, trials, derive_seed(options.seed, stream++));
            if (p.trials == 0) {
                report.checks.push_back(make_check("step2_outage_vs_conditional_mc_" + tag, 0.0, 0.0,
                                                   "skipped: conditioning event has no mass"));
                return;
            }
            report.checks.push_back(proportion_check("step2_outage_vs_conditional_mc_" + tag, so.step2, p));
        });
    }

    guard("discretization_convergence", [&] {
        auto at = [&](int n) { return source_outages(rates, gth, n, Source::S1, options.analytic).step2; };
        const double reference = at(16000);
        const double e10 = std::abs(at(10) - reference);
        const double e1000 = std::abs(at(1000) - reference);
        report.checks.push_back(make_check("discretization_convergence", e1000, std::max(e10, 1e-15),
                                           "N=10 error " + num(e10) + ", N=1000 error " + num(e1000)));
    });

    MdmaAnalysis analysis{StepOutageSet{}, build_chain(StepOutageSet{}, 1, 1), ChainSolution{}};
    bool have_analysis = false;
    guard("chain_analysis", [&] {
        analysis = analyze_mdma(topo, cfg, options.analytic);
        have_analysis = true;
    });
    if (!have_analysis) return report;
    const TransitionMatrix& chain = analysis.chain;
    const ChainSolution& sol = analysis.solution;

    guard("transition_row_sums", [&] {
        double worst = 0.0;
        for (std::size_t i = 0; i < chain.size(); ++i) worst = std::max(worst, std::abs(chain.row_sum(i) - 1.0));
        report.checks.push_back(make_check("transition_row_sums", worst, 1e-12));
    });

    guard("stationary_power_vs_direct", [&] {
        const auto direct = stationary_direct(chain);
        double worst = 0.0;
        for (std::size_t i = 0; i < direct.size(); ++i) worst = std::max(worst, std::abs(direct[i] - sol.stationary[i]));
        report.checks.push_back(make_check("stationary_power_vs_direct", worst, 1e-9));
    });

    guard("simulation", [&] {
        SimOptions so;
        so.slots = trials;
        so.seed = derive_seed(options.seed, stream++);
        so.threads = options.threads;
        const SimEstimate est = run_mdma(topo, cfg, so);

        const auto occ = est.occupancy();
        double worst = 0.0;
        for (std::size_t i = 0; i < occ.size(); ++i) worst = std::max(worst, std::abs(occ[i] - sol.stationary[i]));
        const double occ_tol = 5e-3 * std::sqrt(1e7 / static_cast<double>(trials));
        report.checks.push_back(make_check("occupancy_vs_stationary", worst, occ_tol));
        auto sampled = [&](ValidationCheck c) {
            c.stochastic = true;
            report.checks.push_back(std::move(c));
        };

        report.checks.push_back(proportion_check("overall_op_vs_frequency", sol.overall_op, est.outage));

        const double tc_sigma = est.slot_cost_stderr();
        sampled(make_check("slot_cost_identity", std::abs(est.slot_cost() - sol.slot_cost),
                                           3.0 * tc_sigma,
                                           "analytic " + num(sol.slot_cost) + ", simulated " + num(est.slot_cost())));
        const double cycle = chain.layout().cycle_receptions();
        const double tc_pairs = est.slots_per_pair() / cycle;
        sampled(make_check("slot_cost_from_slots_per_pair", std::abs(tc_pairs - sol.slot_cost),
                                           3.0 * tc_sigma + sol.slot_cost / std::max(1.0, static_cast<double>(est.pairs)),
                                           "simulated " + num(tc_pairs)));
        sampled(make_check("efficiency_identity", std::abs(est.efficiency() - sol.efficiency),
                                           3.0 * est.efficiency_stderr(),
                                           "analytic " + num(sol.efficiency) + ", simulated " + num(est.efficiency())));
    });
    return report;
}

std::string validation_to_json(const ValidationReport& report) {
    json checks = json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"deviation", std::isfinite(c.deviation) ? json(c.deviation) : json(nullptr)},
                          {"tolerance", c.tolerance},
                          {"stochastic", c.stochastic},
                          {"detail", c.detail}});
    }
    return json({{"passed", report.passed()}, {"checks", checks}}).dump(2);
}

}  // namespace mdma
