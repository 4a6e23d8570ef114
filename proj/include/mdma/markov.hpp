#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mdma/analytic.hpp"
#include "mdma/topology.hpp"

namespace mdma {

enum class Phase { PhaseI_S1, PhaseII_S1, PhaseII_S2 };

const char* phase_name(Phase phase);
Source phase_source(Phase phase);

struct ProtocolState {
    Phase phase = Phase::PhaseI_S1;
    int step = 1;        // 1: source broadcast, 2: relay retransmission
    int repetition = 1;  // 1-based within the phase

    /// e.g. "pIS1s1,3"
    std::string label() const;
    bool operator==(const ProtocolState&) const = default;
};

struct ChainOptions {
    // Reproduce the printed Phase II S1 boundary row verbatim: success out of
    // the last Phase II S1 repetition returns to (pIIS1s1, 1) instead of
    // moving on to Phase II S2. The chain then never leaves Phase II S1.
    bool literal_phase_ii_s1_wrap = false;
};

/// State enumeration and the deterministic part of the protocol: which
/// state follows which event. Shared by the transition matrix and the
/// simulator so both follow the same slot accounting.
class ProtocolLayout {
public:
    ProtocolLayout(int beta_s, int beta_p, ChainOptions options = {});

    std::size_t size() const { return states_.size(); }
    const std::vector<ProtocolState>& states() const { return states_; }
    const ProtocolState& state(std::size_t index) const { return states_.at(index); }
    /// Throws DomainError for a phase that has no states.
    std::size_t index(Phase phase, int step, int repetition) const;
    int beta_s() const { return beta_s_; }
    int beta_p() const { return beta_p_; }
    /// Step-1 slots of one full cycle, beta_s + 2 beta_p.
    int cycle_receptions() const { return beta_s_ + 2 * beta_p_; }

    std::size_t initial() const { return 0; }
    /// Successful reception in `from` (either step).
    std::size_t after_success(std::size_t from) const;
    /// Step-1 failure with an empty decode set: the state repeats.
    std::size_t after_empty_failure(std::size_t from) const { return from; }
    /// Step-1 failure with a nonempty decode set.
    std::size_t after_relay_handoff(std::size_t from) const { return from + 1; }
    /// Step-2 failure: back to step 1 of the same repetition.
    std::size_t after_step2_failure(std::size_t from) const { return from - 1; }
    /// True when `from` is the last reception of a cycle, so success there
    /// completes a pair of images.
    bool completes_cycle(std::size_t from) const;

private:
    struct Block {
        Phase phase;
        int count;
        std::size_t offset;
    };
    const Block* block_of(Phase phase) const;
    std::size_t next_block_start(Phase phase) const;

    int beta_s_;
    int beta_p_;
    ChainOptions options_;
    std::vector<Block> blocks_;
    std::vector<ProtocolState> states_;
};

/// Row-stochastic matrix over ProtocolLayout states.
class TransitionMatrix {
public:
    explicit TransitionMatrix(ProtocolLayout layout);

    const ProtocolLayout& layout() const { return layout_; }
    std::size_t size() const { return layout_.size(); }
    double at(std::size_t from, std::size_t to) const { return dense_[from * size() + to]; }
    void add(std::size_t from, std::size_t to, double p) { dense_[from * size() + to] += p; }
    double row_sum(std::size_t from) const;

    struct Entry {
        std::size_t from;
        std::size_t to;
        double probability;
    };
    /// Nonzero entries in row-major order.
    std::vector<Entry> entries() const;

private:
    ProtocolLayout layout_;
    std::vector<double> dense_;
};

/// Per-state outage probability: the Phase II S1 values equal Phase I's.
double state_outage(const ProtocolState& state, const StepOutageSet& outages);
/// Pr{C empty} for the source that transmits in `phase`.
double state_empty_prob(Phase phase, const StepOutageSet& outages);

TransitionMatrix build_chain(const StepOutageSet& outages, int beta_s, int beta_p,
                             ChainOptions options = {});

struct PowerIterationOptions {
    double tolerance = 1e-12;  // max-norm change between iterates
    std::size_t max_iterations = 1'000'000;
};

/// p <- p T from a point mass on the first state until the change drops
/// below tolerance. A chain without any self-loop may be periodic; it is
/// iterated through the lazy matrix (I + T) / 2, which has the same
/// stationary vector. Throws ConvergenceError past the iteration cap.
std::vector<double> stationary_distribution(const TransitionMatrix& t, PowerIterationOptions options = {});
/// Same iteration from an arbitrary starting distribution.
std::vector<double> stationary_distribution(const TransitionMatrix& t, std::span<const double> start,
                                            PowerIterationOptions options = {});

/// Dense solve of (T^T - I) pi = 0 with the normalization sum(pi) = 1
/// replacing one equation.
std::vector<double> stationary_direct(const TransitionMatrix& t);

/// Occupancy-weighted sum of the per-step outage probabilities.
double overall_outage(std::span<const double> pi, const ProtocolLayout& layout, const StepOutageSet& outages);

/// Expected slots per successful reception, 1 / (1 - op).
double slot_cost(double op);

/// 2 / (t_c (beta_s + 2 beta_p) B W).
double resource_efficiency(double t_c, int beta_s, int beta_p, double bandwidth_units, double power_units);

struct ChainSolution {
    std::vector<double> stationary;
    double overall_op = 0.0;
    double slot_cost = 1.0;
    double efficiency = 0.0;
};

ChainSolution solve_chain(const TransitionMatrix& t, const StepOutageSet& outages, double bandwidth_units,
                          double power_units);

/// Closed-form pipeline for one configuration: step outages, chain, solution.
struct MdmaAnalysis {
    StepOutageSet outages;
    TransitionMatrix chain;
    ChainSolution solution;
};

MdmaAnalysis analyze_mdma(const NetworkTopology& topology, const SystemConfig& config,
                          const AnalyticOptions& analytic = {}, ChainOptions chain = {});

}  // namespace mdma
