#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mdma/topology.hpp"

namespace mdma {

/// Contribution of one cascaded source-relay-destination path to the
/// destination SNR: zero with probability gate_prob (the relay failed to
/// decode), otherwise exponential with the given rate.
struct GatedExponential {
    double gate_prob = 0.0;
    double rate = 1.0;

    double cdf(double x) const;
    /// E[exp(-s Y)].
    double mgf(double s) const;
};

/// Pr{gamma < gamma_th} for an exponential link SNR: 1 - exp(-rate * gamma_th).
double direct_outage(const LinkParam& link, double gamma_th);

/// Per-relay probability that the step-1 broadcast of `source` is not decoded.
std::vector<double> decode_gate_probs(const LinkRates& rates, double gamma_th, Source source);
std::vector<double> decode_gate_probs(const NetworkTopology& topology, const SystemConfig& config,
                                      Source source);

/// Gate probabilities paired with the relay-to-destination rates.
std::vector<GatedExponential> relay_paths(const LinkRates& rates, double gamma_th, Source source);

/// d_y^alpha / (d_y^alpha - d_x^alpha). Throws TieError when the powered
/// distances coincide.
double theta(double d_x, double d_y, double alpha);
/// Same coefficient written in terms of link rates: rate_y / (rate_y - rate_x).
double theta_from_rates(double rate_x, double rate_y);

enum class TiePolicy {
    Error,    // refuse tied rates
    Perturb,  // split tied rates by factors 1, 1 + 1e-7, 1 - 1e-7, 1 + 2e-7, ...
};

inline constexpr double kTieTolerance = 1e-9;
inline constexpr double kTiePerturbation = 1e-7;
inline constexpr std::size_t kMaxClosedFormRelays = 20;

/// One nonempty decode set and the exponential-CDF expansion of its relay sum.
struct SubsetTerm {
    std::uint32_t mask = 0;  // bit i set <=> relay i decoded
    double weight = 0.0;     // Pr{C = this set}
};

/// coefficient * (1 - exp(-rate * gamma)); a subset's conditional CDF is the
/// sum of its terms.
struct ExponentialTerm {
    double coefficient = 0.0;  // product of theta coefficients
    double rate = 0.0;
};

/// Pr{sum of relay-to-destination SNRs over C <= gamma, C nonempty} as an
/// exact distinct-rate expansion over every nonempty decode set.
class DefectiveCdf {
public:
    DefectiveCdf(std::vector<SubsetTerm> subsets, std::vector<double> rates, double empty_prob);

    double operator()(double gamma) const;
    /// Value as gamma -> infinity: 1 - prod(A_k).
    double limit() const { return 1.0 - empty_prob_; }
    double empty_prob() const { return empty_prob_; }

    const std::vector<SubsetTerm>& subsets() const { return subsets_; }
    /// Partial-fraction expansion of the relay sum given the decode set
    /// `mask`. Computed on demand; 2^m subsets are not materialized.
    std::vector<ExponentialTerm> expansion(std::uint32_t mask) const;
    /// Rates actually used (after any tie perturbation).
    const std::vector<double>& rates() const { return rates_; }
    /// Coefficient of (1 - exp(-rates()[j] * gamma)) after collecting every subset.
    const std::vector<long double>& collected() const { return collected_; }

private:
    std::vector<SubsetTerm> subsets_;
    std::vector<double> rates_;
    std::vector<long double> collected_;
    double empty_prob_;
};

DefectiveCdf relay_sum_cdf(std::span<const GatedExponential> gates,
                           TiePolicy ties = TiePolicy::Error);

/// Rates after the tie policy is applied; throws TieError under
/// TiePolicy::Error when any pair is tied.
std::vector<double> resolve_ties(std::span<const double> rates, TiePolicy ties);

/// Same defective CDF obtained by numerically convolving the gated
/// exponentials one at a time on a uniform grid over [0, gamma_max].
/// Works for tied rates and any relay count; error is O(h^2) in the step.
class NumericalRelaySumCdf {
public:
    NumericalRelaySumCdf(std::span<const GatedExponential> gates, double gamma_max,
                         std::size_t steps = std::size_t{1} << 16);

    double operator()(double gamma) const;
    double limit() const { return 1.0 - empty_prob_; }
    double gamma_max() const { return gamma_max_; }

private:
    std::vector<double> grid_cdf_;  // full (non-defective) CDF of the sum at k*h
    double step_;
    double gamma_max_;
    double empty_prob_;
};

/// Probability masses over the bins ((j-1) h, j h], h = gamma_th / N.
struct BinnedPmf {
    double gamma_th = 1.0;
    std::vector<double> bins;

    std::size_t granularity() const { return bins.size(); }
    double total() const;
};

BinnedPmf bin_relay_sum(const DefectiveCdf& cdf, double gamma_th, int granularity);
BinnedPmf bin_relay_sum(const NumericalRelaySumCdf& cdf, double gamma_th, int granularity);

/// PMF of a direct-link SNR conditioned on being below gamma_th.
BinnedPmf bin_conditional_direct(const LinkParam& link, double gamma_th, int granularity);

/// Full linear convolution: out[k] = sum_i a[i] b[k - i], length a + b - 1.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// Step-2 outage: convolve the relay-sum and conditional-direct PMFs, keep the
/// first N output entries and condition on a nonempty decode set.
double step2_outage(const BinnedPmf& relay_pmf, const BinnedPmf& direct_pmf,
                    std::span<const GatedExponential> gates);

struct StepOutageSet {
    double op_pIS1s1 = 0.0;
    double op_pIS1s2 = 0.0;
    double op_pIIS1s1 = 0.0;
    double op_pIIS1s2 = 0.0;
    double op_pIIS2s1 = 0.0;
    double op_pIIS2s2 = 0.0;
    double empty_set_prob_s1 = 0.0;  // prod A_i
    double empty_set_prob_s2 = 0.0;  // prod A^_i
};

struct AnalyticOptions {
    TiePolicy ties = TiePolicy::Error;
    // Use NumericalRelaySumCdf instead of the subset expansion. Required
    // beyond kMaxClosedFormRelays relays.
    bool numerical_relay_sum = false;
    std::size_t numerical_steps = std::size_t{1} << 16;
};

/// The two step outages for a single source.
struct SourceOutages {
    double step1 = 0.0;
    double step2 = 0.0;
    double empty_set_prob = 0.0;
};

SourceOutages source_outages(const LinkRates& rates, double gamma_th, int granularity, Source source,
                             const AnalyticOptions& options = {});

StepOutageSet step_outages(const NetworkTopology& topology, const SystemConfig& config,
                           const AnalyticOptions& options = {});

}  // namespace mdma
