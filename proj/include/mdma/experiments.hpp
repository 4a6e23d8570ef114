#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdma/analytic.hpp"
#include "mdma/markov.hpp"
#include "mdma/simulator.hpp"
#include "mdma/topology.hpp"

namespace mdma {

inline constexpr const char* kVersion = "0.1.0";

enum class SweepParameter { PowerDbm, Eta, Granularity, RelayCount };

const char* parameter_name(SweepParameter p);
SweepParameter parse_parameter(std::string_view text);

/// A scheme in a sweep. MDMA may pin its own eta ("mdma@0.7"); otherwise the
/// config value (or the swept value) applies.
struct SchemeVariant {
    Scheme scheme = Scheme::MDMA;
    std::optional<double> eta;

    std::string label() const;
};

/// "mdma", "mdma@0.7", "tdma", "fdma", "noma" (case-insensitive).
SchemeVariant parse_variant(std::string_view text);

/// Published sweeps should use at least this many slots per point.
inline constexpr std::uint64_t kPublishedMinTrials = 10'000;

struct SweepSpec {
    SweepParameter parameter = SweepParameter::PowerDbm;
    std::vector<double> values;
    std::vector<SchemeVariant> schemes;
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;

    /// Throws ConfigError: empty or unsorted grid, empty scheme list, zero
    /// trials, or fewer than kPublishedMinTrials when `published`.
    void validate(bool published = false) const;
};

/// 0, 2, ..., 30 dBm.
std::vector<double> default_power_grid();
/// Power sweep over the default grid for MDMA at eta 0.5/0.7/0.9 and the
/// three baselines.
SweepSpec default_sweep_spec();

/// Sweep files are JSON:
///   {"parameter": "power_dbm", "values": [0, 2, 4] | {"start": 0, "stop": 30, "step": 2},
///    "schemes": ["mdma@0.5", "noma"], "trials": 1000000, "seed": 1}
SweepSpec parse_sweep_spec(std::string_view json_text);
std::string sweep_spec_to_json(const SweepSpec& spec);

struct ResultRow {
    std::string scheme;  // SchemeVariant::label()
    double value = 0.0;  // swept parameter value
    // Closed-form values; empty for baselines and for points whose analysis failed.
    std::optional<double> analytic_op;
    std::optional<double> analytic_tc;
    std::optional<double> analytic_phi;
    std::optional<double> sim_op;
    std::optional<double> sim_op_stderr;
    std::optional<double> sim_tc;
    std::optional<double> sim_tc_stderr;
    std::optional<double> sim_phi;
    std::optional<double> sim_phi_stderr;
    std::optional<double> sim_slots_per_pair;
    std::uint64_t seed = 0;
    std::string error;  // nonempty when any part of the point failed
};

struct SweepOptions {
    unsigned threads = 0;  // concurrent grid points; 0: hardware concurrency
    AnalyticOptions analytic;
    SimOptions sim;  // slots and seed are taken from the spec
    bool simulate = true;
};

/// `setup` with the swept parameter set to `value`. A relay-count sweep
/// replaces the relays with an evenly spaced column.
Setup apply_parameter(const Setup& setup, SweepParameter parameter, double value);

/// Rows ordered by grid index, then by scheme order in the spec. Each
/// (point, scheme) gets its own seed derived from the spec seed.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, const Setup& setup, const SweepOptions& options = {});

/// Byte-stable CSV; missing values are empty fields.
void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<ResultRow>& rows);
std::string sweep_manifest_json(const SweepSpec& spec, const Setup& setup, const std::string& csv_name);
/// FNV-1a of the canonical setup and spec JSON.
std::string config_hash(const SweepSpec& spec, const Setup& setup);

struct ValidationCheck {
    std::string name;
    bool passed = false;
    double deviation = 0.0;  // measured
    double tolerance = 0.0;  // allowed
    // Monte Carlo checks: the tolerance is 3 standard errors, so
    // 3 * deviation / tolerance is the z-score.
    bool stochastic = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool passed() const;
};

struct ValidationOptions {
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    AnalyticOptions analytic;
};

/// Runs every cross-check between the closed form and simulation for one
/// configuration. Failures are reported, not thrown.
ValidationReport validate(const Setup& setup, const ValidationOptions& options = {});
std::string validation_to_json(const ValidationReport& report);

/// Frequency of step-2 outage under the conditional law: direct SNR below
/// threshold, decode set drawn given it is nonempty.
Proportion conditional_step2_monte_carlo(const LinkRates& rates, double gamma_th, Source source,
                                         std::uint64_t trials, std::uint64_t seed);

}  // namespace mdma
