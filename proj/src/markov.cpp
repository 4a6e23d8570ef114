#include "mdma/markov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "mdma/error.hpp"

namespace mdma {

const char* phase_name(Phase phase) {
    switch (phase) {
        case Phase::PhaseI_S1: return "pIS1";
        case Phase::PhaseII_S1: return "pIIS1";
        case Phase::PhaseII_S2: return "pIIS2";
    }
    return "?";
}

Source phase_source(Phase phase) { return phase == Phase::PhaseII_S2 ? Source::S2 : Source::S1; }

std::string ProtocolState::label() const {
    return std::string(phase_name(phase)) + "s" + std::to_string(step) + "," + std::to_string(repetition);
}

ProtocolLayout::ProtocolLayout(int beta_s, int beta_p, ChainOptions options)
    : beta_s_(beta_s), beta_p_(beta_p), options_(options) {
    if (beta_s < 0 || beta_p < 0) throw DomainError("slot counts must be non-negative");
    if (beta_s + beta_p < 1) throw DomainError("beta_s and beta_p cannot both be zero");
    const std::pair<Phase, int> order[] = {
        {Phase::PhaseI_S1, beta_s}, {Phase::PhaseII_S1, beta_p}, {Phase::PhaseII_S2, beta_p}};
    for (const auto& [phase, count] : order) {
        if (count == 0) continue;
        blocks_.push_back({phase, count, states_.size()});
        for (int j = 1; j <= count; ++j) {
            states_.push_back({phase, 1, j});
            states_.push_back({phase, 2, j});
        }
    }
}

const ProtocolLayout::Block* ProtocolLayout::block_of(Phase phase) const {
    for (const auto& b : blocks_) {
        if (b.phase == phase) return &b;
    }
    return nullptr;
}

std::size_t ProtocolLayout::index(Phase phase, int step, int repetition) const {
    const Block* b = block_of(phase);
    if (b == nullptr) throw DomainError(std::string("phase ") + phase_name(phase) + " has no states");
    if (step < 1 || step > 2 || repetition < 1 || repetition > b->count) {
        throw DomainError("state outside the protocol layout");
    }
    return b->offset + 2 * static_cast<std::size_t>(repetition - 1) + static_cast<std::size_t>(step - 1);
}

std::size_t ProtocolLayout::next_block_start(Phase phase) const {
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        if (blocks_[k].phase == phase) return blocks_[(k + 1) % blocks_.size()].offset;
    }
    throw DomainError("unknown phase");
}

std::size_t ProtocolLayout::after_success(std::size_t from) const {
    const ProtocolState& s = state(from);
    const Block* b = block_of(s.phase);
    if (s.repetition < b->count) return index(s.phase, 1, s.repetition + 1);
    if (options_.literal_phase_ii_s1_wrap && s.phase == Phase::PhaseII_S1) return b->offset;
    return next_block_start(s.phase);
}

bool ProtocolLayout::completes_cycle(std::size_t from) const {
    const ProtocolState& s = state(from);
    const Block& last = blocks_.back();
    if (s.phase != last.phase || s.repetition != last.count) return false;
    return !(options_.literal_phase_ii_s1_wrap && s.phase == Phase::PhaseII_S1);
}

TransitionMatrix::TransitionMatrix(ProtocolLayout layout)
    : layout_(std::move(layout)), dense_(layout_.size() * layout_.size(), 0.0) {}

double TransitionMatrix::row_sum(std::size_t from) const {
    double s = 0.0;
    for (std::size_t to = 0; to < size(); ++to) s += at(from, to);
    return s;
}

std::vector<TransitionMatrix::Entry> TransitionMatrix::entries() const {
    std::vector<Entry> out;
    for (std::size_t i = 0; i < size(); ++i) {
        for (std::size_t j = 0; j < size(); ++j) {
            if (at(i, j) != 0.0) out.push_back({i, j, at(i, j)});
        }
    }
    return out;
}

double state_outage(const ProtocolState& state, const StepOutageSet& o) {
    switch (state.phase) {
        case Phase::PhaseI_S1: return state.step == 1 ? o.op_pIS1s1 : o.op_pIS1s2;
        case Phase::PhaseII_S1: return state.step == 1 ? o.op_pIIS1s1 : o.op_pIIS1s2;
        case Phase::PhaseII_S2: return state.step == 1 ? o.op_pIIS2s1 : o.op_pIIS2s2;
    }
    return 0.0;
}

double state_empty_prob(Phase phase, const StepOutageSet& o) {
    return phase_source(phase) == Source::S1 ? o.empty_set_prob_s1 : o.empty_set_prob_s2;
}

TransitionMatrix build_chain(const StepOutageSet& outages, int beta_s, int beta_p, ChainOptions options) {
    const double values[] = {outages.op_pIS1s1,  outages.op_pIS1s2,         outages.op_pIIS1s1,
                             outages.op_pIIS1s2, outages.op_pIIS2s1,        outages.op_pIIS2s2,
                             outages.empty_set_prob_s1, outages.empty_set_prob_s2};
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("step outage probability outside [0, 1]");
    }
    TransitionMatrix t(ProtocolLayout(beta_s, beta_p, options));
    const ProtocolLayout& layout = t.layout();
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const ProtocolState& s = layout.state(i);
        const double op = state_outage(s, outages);
        if (s.step == 1) {
            const double empty = state_empty_prob(s.phase, outages);
            t.add(i, layout.after_empty_failure(i), op * empty);
            t.add(i, layout.after_relay_handoff(i), op * (1.0 - empty));
        } else {
            t.add(i, layout.after_step2_failure(i), op);
        }
        t.add(i, layout.after_success(i), 1.0 - op);
    }
    return t;
}

namespace {

std::vector<double> iterate(const TransitionMatrix& t, std::vector<double> p, PowerIterationOptions options) {
    const auto entries = t.entries();
    bool has_self_loop = false;
    for (const auto& e : entries) has_self_loop = has_self_loop || (e.from == e.to && e.probability > 0.0);
    const double keep = has_self_loop ? 0.0 : 0.5;

    std::vector<double> next(p.size());
    double change = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        for (std::size_t k = 0; k < p.size(); ++k) next[k] = keep * p[k];
        for (const auto& e : entries) next[e.to] += (1.0 - keep) * p[e.from] * e.probability;
        double total = 0.0;
        for (double v : next) total += v;
        change = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            next[k] /= total;
            change = std::max(change, std::abs(next[k] - p[k]));
        }
        p.swap(next);
        if (change < options.tolerance) return p;
    }
    throw ConvergenceError("power iteration did not converge within " +
                               std::to_string(options.max_iterations) + " iterations",
                           change);
}

}  // namespace

std::vector<double> stationary_distribution(const TransitionMatrix& t, PowerIterationOptions options) {
    std::vector<double> start(t.size(), 0.0);
    start[t.layout().initial()] = 1.0;
    return iterate(t, std::move(start), options);
}

std::vector<double> stationary_distribution(const TransitionMatrix& t, std::span<const double> start,
                                            PowerIterationOptions options) {
    if (start.size() != t.size()) throw DomainError("starting distribution has the wrong size");
    return iterate(t, std::vector<double>(start.begin(), start.end()), options);
}

std::vector<double> stationary_direct(const TransitionMatrix& t) {
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = t.at(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) - (i == j ? 1.0 : 0.0);
        }
    }
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw ConvergenceError("stationary system is singular", 0.0);
    const Eigen::VectorXd pi = lu.solve(rhs);
    return {pi.data(), pi.data() + n};
}

double overall_outage(std::span<const double> pi, const ProtocolLayout& layout, const StepOutageSet& outages) {
    if (pi.size() != layout.size()) throw DomainError("occupancy vector has the wrong size");
    double op = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) op += pi[i] * state_outage(layout.state(i), outages);
    return std::clamp(op, 0.0, 1.0);
}

double slot_cost(double op) {
    if (!(op >= 0.0 && op < 1.0)) throw DomainError("slot cost diverges: outage probability must lie in [0, 1)");
    return 1.0 / (1.0 - op);
}

double resource_efficiency(double t_c, int beta_s, int beta_p, double bandwidth_units, double power_units) {
    const double denom = t_c * (beta_s + 2.0 * beta_p) * bandwidth_units * power_units;
    if (!(t_c > 0.0) || beta_s < 0 || beta_p < 0 || !(denom > 0.0) || !std::isfinite(denom)) {
        throw DomainError("resource efficiency needs a positive denominator");
    }
    return 2.0 / denom;
}

ChainSolution solve_chain(const TransitionMatrix& t, const StepOutageSet& outages, double bandwidth_units,
                          double power_units) {
    ChainSolution out;
    out.stationary = stationary_distribution(t);
    out.overall_op = overall_outage(out.stationary, t.layout(), outages);
    out.slot_cost = slot_cost(out.overall_op);
    out.efficiency = resource_efficiency(out.slot_cost, t.layout().beta_s(), t.layout().beta_p(),
                                         bandwidth_units, power_units);
    return out;
}

MdmaAnalysis analyze_mdma(const NetworkTopology& topology, const SystemConfig& config,
                          const AnalyticOptions& analytic, ChainOptions chain) {
    StepOutageSet outages = step_outages(topology, config, analytic);
    TransitionMatrix t = build_chain(outages, config.beta_s(), config.beta_p(), chain);
    ChainSolution solution = solve_chain(t, outages, config.bandwidth_units, config.power_units);
    return {outages, std::move(t), std::move(solution)};
}

}  // namespace mdma
