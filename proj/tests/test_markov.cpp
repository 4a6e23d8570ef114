#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mdma/error.hpp"
#include "mdma/markov.hpp"

using namespace mdma;

namespace {

StepOutageSet uniform_outages(double q, double empty = 0.0) {
    StepOutageSet o;
    o.op_pIS1s1 = o.op_pIS1s2 = o.op_pIIS1s1 = o.op_pIIS1s2 = o.op_pIIS2s1 = o.op_pIIS2s2 = q;
    o.empty_set_prob_s1 = o.empty_set_prob_s2 = empty;
    return o;
}

StepOutageSet random_outages(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 0.99);
    StepOutageSet o;
    o.op_pIS1s1 = o.op_pIIS1s1 = u(rng);
    o.op_pIS1s2 = o.op_pIIS1s2 = u(rng);
    o.op_pIIS2s1 = u(rng);
    o.op_pIIS2s2 = u(rng);
    o.empty_set_prob_s1 = u(rng);
    o.empty_set_prob_s2 = u(rng);
    return o;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("state enumeration") {
    const ProtocolLayout l(5, 5);
    CHECK(l.size() == 30);
    CHECK(l.state(0).label() == "pIS1s1,1");
    CHECK(l.state(1).label() == "pIS1s2,1");
    CHECK(l.state(2).label() == "pIS1s1,2");
    CHECK(l.state(10).label() == "pIIS1s1,1");
    CHECK(l.state(20).label() == "pIIS2s1,1");
    CHECK(l.state(29).label() == "pIIS2s2,5");
    std::set<std::string> labels;
    for (const auto& s : l.states()) labels.insert(s.label());
    CHECK(labels.size() == l.size());
    CHECK(l.index(Phase::PhaseII_S2, 2, 3) == 25);
}

TEST_CASE("state count identity over a grid") {
    for (double bits : {1.0, 5.0, 10.0, 17.0}) {
        for (double r0 : {0.5, 1.0, 2.0}) {
            for (int k = 0; k <= 10; ++k) {
                SystemConfig c;
                c.total_bits = bits;
                c.rate_r0 = r0;
                c.eta = k / 10.0;
                const ProtocolLayout l(c.beta_s(), c.beta_p());
                CHECK(l.size() == static_cast<std::size_t>(2 * c.beta_s() + 4 * c.beta_p()));
            }
        }
    }
    CHECK_THROWS_AS(ProtocolLayout(0, 0), DomainError);
}

TEST_CASE("transition structure") {
    std::mt19937_64 rng(1);
    const StepOutageSet o = random_outages(rng);
    const TransitionMatrix t = build_chain(o, 5, 5);
    const auto& l = t.layout();
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(std::abs(t.row_sum(i) - 1.0) <= 1e-12);
        int nonzero = 0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            CHECK(t.at(i, j) >= 0.0);
            CHECK(t.at(i, j) <= 1.0);
            nonzero += t.at(i, j) != 0.0;
        }
        CHECK(nonzero <= 3);
    }
    // step 1 of Phase I S1: self-loop, hand-off to relays, advance
    const std::size_t s = l.index(Phase::PhaseI_S1, 1, 2);
    CHECK(t.at(s, s) == doctest::Approx(o.op_pIS1s1 * o.empty_set_prob_s1));
    CHECK(t.at(s, s + 1) == doctest::Approx(o.op_pIS1s1 * (1 - o.empty_set_prob_s1)));
    CHECK(t.at(s, l.index(Phase::PhaseI_S1, 1, 3)) == doctest::Approx(1 - o.op_pIS1s1));
    // step 2 failure returns to step 1 of the same repetition
    CHECK(t.at(s + 1, s) == doctest::Approx(o.op_pIS1s2));
    CHECK(t.at(s + 1, l.index(Phase::PhaseI_S1, 1, 3)) == doctest::Approx(1 - o.op_pIS1s2));
    // phase boundaries, from both steps
    const std::size_t next2 = l.index(Phase::PhaseII_S1, 1, 1);
    CHECK(t.at(l.index(Phase::PhaseI_S1, 1, 5), next2) == doctest::Approx(1 - o.op_pIS1s1));
    CHECK(t.at(l.index(Phase::PhaseI_S1, 2, 5), next2) == doctest::Approx(1 - o.op_pIS1s2));
    const std::size_t next3 = l.index(Phase::PhaseII_S2, 1, 1);
    CHECK(t.at(l.index(Phase::PhaseII_S1, 1, 5), next3) == doctest::Approx(1 - o.op_pIIS1s1));
    CHECK(t.at(l.index(Phase::PhaseII_S2, 2, 5), 0) == doctest::Approx(1 - o.op_pIIS2s2));
    CHECK(l.completes_cycle(l.index(Phase::PhaseII_S2, 1, 5)));
    CHECK_FALSE(l.completes_cycle(l.index(Phase::PhaseII_S1, 1, 5)));
}

TEST_CASE("literal Phase II S1 wrap") {
    std::mt19937_64 rng(2);
    const StepOutageSet o = random_outages(rng);
    const TransitionMatrix t = build_chain(o, 5, 5, ChainOptions{true});
    const auto& l = t.layout();
    CHECK(t.at(l.index(Phase::PhaseII_S1, 1, 5), l.index(Phase::PhaseII_S1, 1, 1)) ==
          doctest::Approx(1 - o.op_pIIS1s1));
    const auto pi = stationary_distribution(t);
    double in_s2 = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (l.state(i).phase != Phase::PhaseII_S1) in_s2 += pi[i];
    }
    CHECK(in_s2 <= 1e-9);
}

TEST_CASE("failure-free chain is a cyclic permutation") {
    const TransitionMatrix t = build_chain(uniform_outages(0.0), 5, 5);
    const auto& l = t.layout();
    std::size_t s = 0;
    std::set<std::size_t> seen;
    for (int k = 0; k < 15; ++k) {
        CHECK(l.state(s).step == 1);
        seen.insert(s);
        std::size_t next = s;
        for (std::size_t j = 0; j < t.size(); ++j) {
            if (t.at(s, j) == 1.0) next = j;
        }
        s = next;
    }
    CHECK(s == 0);
    CHECK(seen.size() == 15);
    const auto pi = stationary_distribution(t);
    for (std::size_t i = 0; i < pi.size(); ++i) {
        CHECK(pi[i] == doctest::Approx(l.state(i).step == 1 ? 1.0 / 15 : 0.0).epsilon(1e-9));
    }
    CHECK(overall_outage(pi, l, uniform_outages(0.0)) == 0.0);
}

TEST_CASE("no decodable relay: no step-2 state is reachable") {
    StepOutageSet o = uniform_outages(0.3, 1.0);
    const TransitionMatrix t = build_chain(o, 3, 2);
    const auto& l = t.layout();
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (l.state(i).step != 1) continue;
        CHECK(t.at(i, i) == doctest::Approx(0.3));
        CHECK(t.at(i, i + 1) == 0.0);
    }
    const auto pi = stationary_distribution(t);
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (l.state(i).step == 2) CHECK(pi[i] <= 1e-12);
    }
}

TEST_CASE("two-state switching chain") {
    // One repetition, no personalized phase: only steps 1 and 2 of Phase I S1.
    StepOutageSet o;
    o.op_pIS1s1 = 1.0;
    o.op_pIS1s2 = 0.5;
    o.empty_set_prob_s1 = 0.5;
    const TransitionMatrix t = build_chain(o, 1, 0);
    REQUIRE(t.size() == 2);
    CHECK(t.at(0, 1) == 0.5);
    CHECK(t.at(1, 0) == 1.0);  // failure and success both lead back to step 1
    TransitionMatrix sym(ProtocolLayout(1, 0));
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) sym.add(i, j, 0.5);
    }
    const auto pi = stationary_distribution(sym);
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-10));
    const auto pd = stationary_direct(build_chain(o, 1, 0));
    CHECK(pd[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("stationary vector properties") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const StepOutageSet o = random_outages(rng);
        const int bs = 1 + trial % 5, bp = trial % 4;
        const TransitionMatrix t = build_chain(o, bs, bp);
        const auto pi = stationary_distribution(t);
        double sum = 0.0;
        for (double v : pi) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-10);
        std::vector<double> pt(pi.size(), 0.0);
        for (const auto& e : t.entries()) pt[e.to] += pi[e.from] * e.probability;
        CHECK(max_diff(pt, pi) <= 1e-9);
        CHECK(max_diff(stationary_direct(t), pi) <= 1e-9);

        std::uniform_real_distribution<double> u(0, 1);
        for (int start = 0; start < 3; ++start) {
            std::vector<double> p0(pi.size());
            double z = 0.0;
            for (double& v : p0) z += (v = u(rng));
            for (double& v : p0) v /= z;
            CHECK(max_diff(stationary_distribution(t, p0), pi) <= 1e-9);
        }

        const double op = overall_outage(pi, t.layout(), o);
        const double lo = std::min({o.op_pIS1s1, o.op_pIS1s2, o.op_pIIS2s1, o.op_pIIS2s2});
        const double hi = std::max({o.op_pIS1s1, o.op_pIS1s2, o.op_pIIS2s1, o.op_pIIS2s2});
        CHECK(op >= lo - 1e-12);
        CHECK(op <= hi + 1e-12);
    }
}

TEST_CASE("iteration cap raises a convergence error") {
    std::mt19937_64 rng(6);
    const TransitionMatrix t = build_chain(random_outages(rng), 5, 5);
    PowerIterationOptions opts;
    opts.max_iterations = 3;
    CHECK_THROWS_AS(stationary_distribution(t, opts), ConvergenceError);
}

TEST_CASE("overall outage of a constant") {
    for (double q : {0.0, 0.2, 0.7}) {
        const StepOutageSet o = uniform_outages(q, 0.4);
        const TransitionMatrix t = build_chain(o, 5, 5);
        CHECK(overall_outage(stationary_distribution(t), t.layout(), o) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("slot cost and efficiency") {
    CHECK(slot_cost(0.0) == 1.0);
    CHECK(slot_cost(0.5) == 2.0);
    CHECK(slot_cost(0.9) == doctest::Approx(10.0));
    CHECK_THROWS_AS(slot_cost(1.0), DomainError);
    CHECK(resource_efficiency(1.0, 5, 5, 1.0, 1.0) == doctest::Approx(2.0 / 15.0));
    CHECK(resource_efficiency(1.0, 5, 5, 2.0, 1.0) == doctest::Approx(1.0 / 15.0));
    CHECK(resource_efficiency(1.0, 10, 0, 1.0, 1.0) == doctest::Approx(0.2));
    CHECK_THROWS_AS(resource_efficiency(1.0, 0, 0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(build_chain(uniform_outages(1.2), 5, 5), DomainError);
}

TEST_CASE("default analysis") {
    const Setup s = default_paper_setup();
    const MdmaAnalysis a = analyze_mdma(s.topology, s.config);
    CHECK(a.solution.overall_op >= 0.0);
    CHECK(a.solution.overall_op < 1.0);
    CHECK(a.solution.slot_cost >= 1.0);
    CHECK(a.solution.efficiency > 0.0);
    CHECK(a.solution.slot_cost == doctest::Approx(1.0 / (1.0 - a.solution.overall_op)));
}

TEST_CASE("overall outage never increases with power") {
    Setup s = default_paper_setup();
    double last = 1.0;
    for (int k = 0; k < 20; ++k) {
        s.config.power_dbm = -5.0 + 2.0 * k;
        const double op = analyze_mdma(s.topology, s.config).solution.overall_op;
        CHECK(op <= last + 1e-15);
        last = op;
    }
}

TEST_CASE("empty phases are skipped") {
    for (double eta : {0.0, 1.0}) {
        Setup s = default_paper_setup();
        s.config.eta = eta;
        const MdmaAnalysis a = analyze_mdma(s.topology, s.config);
        CHECK(a.chain.size() == static_cast<std::size_t>(2 * s.config.beta_s() + 4 * s.config.beta_p()));
        for (std::size_t i = 0; i < a.chain.size(); ++i) CHECK(std::abs(a.chain.row_sum(i) - 1.0) <= 1e-12);
    }
}
