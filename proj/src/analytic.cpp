#include "mdma/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "compensated.hpp"
#include "mdma/error.hpp"

namespace mdma {

namespace {

using detail::CompensatedSum;
using detail::sorted_sum;

// 1 - exp(-x) without cancellation for small x.
double one_minus_exp_neg(double x) { return -std::expm1(-x); }

bool tied(double a, double b) {
    return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b));
}

void check_gates(std::span<const GatedExponential> gates) {
    if (gates.empty()) throw DomainError("relay sum needs at least one path");
    for (const auto& g : gates) {
        if (!(g.gate_prob >= 0.0 && g.gate_prob <= 1.0)) {
            throw DomainError("gate probability outside [0, 1]");
        }
        if (!(g.rate > 0.0) || !std::isfinite(g.rate)) throw DomainError("path rate must be positive");
    }
}

double empty_set_prob(std::span<const GatedExponential> gates) {
    double p = 1.0;
    for (const auto& g : gates) p *= g.gate_prob;
    return p;
}

template <typename Cdf>
BinnedPmf bin_cdf(const Cdf& cdf, double gamma_th, int granularity) {
    if (granularity < 1) throw DomainError("granularity must be >= 1");
    if (!(gamma_th >= 0.0)) throw DomainError("gamma_th must be >= 0");
    BinnedPmf out;
    out.gamma_th = gamma_th;
    out.bins.resize(static_cast<std::size_t>(granularity));
    const double n = granularity;
    double prev = cdf(0.0);
    for (int j = 1; j <= granularity; ++j) {
        const double cur = cdf(gamma_th * (j / n));
        out.bins[j - 1] = std::max(0.0, cur - prev);
        prev = cur;
    }
    return out;
}

}  // namespace

double GatedExponential::cdf(double x) const {
    if (x < 0.0) return 0.0;
    return gate_prob + (1.0 - gate_prob) * one_minus_exp_neg(rate * x);
}

double GatedExponential::mgf(double s) const { return gate_prob + (1.0 - gate_prob) * rate / (s + rate); }

double direct_outage(const LinkParam& link, double gamma_th) {
    if (!(gamma_th >= 0.0)) throw DomainError("gamma_th must be >= 0");
    return one_minus_exp_neg(link.rate_lambda * gamma_th);
}

std::vector<double> decode_gate_probs(const LinkRates& rates, double gamma_th, Source source) {
    std::vector<double> out;
    for (const auto& link : rates.to_relays(source)) out.push_back(direct_outage(link, gamma_th));
    return out;
}

std::vector<double> decode_gate_probs(const NetworkTopology& topology, const SystemConfig& config,
                                      Source source) {
    return decode_gate_probs(link_rates(topology, config), config.gamma_th(), source);
}

std::vector<GatedExponential> relay_paths(const LinkRates& rates, double gamma_th, Source source) {
    const auto gates = decode_gate_probs(rates, gamma_th, source);
    std::vector<GatedExponential> out;
    out.reserve(gates.size());
    for (std::size_t i = 0; i < gates.size(); ++i) out.push_back({gates[i], rates.rd[i].rate_lambda});
    return out;
}

double theta(double d_x, double d_y, double alpha) {
    return theta_from_rates(std::pow(d_x, alpha), std::pow(d_y, alpha));
}

double theta_from_rates(double rate_x, double rate_y) {
    if (tied(rate_x, rate_y)) throw TieError("theta undefined for equal rates");
    return rate_y / (rate_y - rate_x);
}

std::vector<double> resolve_ties(std::span<const double> rates, TiePolicy ties) {
    std::vector<double> out(rates.begin(), rates.end());
    const std::size_t m = out.size();
    std::vector<bool> grouped(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        if (grouped[i]) continue;
        // Members after the first get factors 1 + 1e-7, 1 - 1e-7, 1 + 2e-7, ...
        int k = 0;
        for (std::size_t j = i + 1; j < m; ++j) {
            if (grouped[j] || !tied(rates[i], rates[j])) continue;
            if (ties == TiePolicy::Error) {
                throw TieError("relay rates " + std::to_string(i) + " and " + std::to_string(j) +
                               " are tied; use the tie-perturbation or numerical relay-sum path");
            }
            grouped[j] = true;
            ++k;
            const int magnitude = (k + 1) / 2;
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            out[j] = rates[j] * (1.0 + sign * magnitude * kTiePerturbation);
        }
    }
    if (ties == TiePolicy::Perturb) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                if (tied(out[i], out[j])) throw TieError("tie persists after perturbation");
            }
        }
    }
    return out;
}

DefectiveCdf::DefectiveCdf(std::vector<SubsetTerm> subsets, std::vector<double> rates, double empty_prob)
    : subsets_(std::move(subsets)), rates_(std::move(rates)), empty_prob_(empty_prob) {
    const std::size_t m = rates_.size();
    // theta[j][k] = rate_k / (rate_k - rate_j)
    std::vector<long double> theta(m * m, 0.0L);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            if (k == j) continue;
            const long double rj = rates_[j];
            const long double rk = rates_[k];
            theta[j * m + k] = rk / (rk - rj);
        }
    }
    // Sorting every subset contribution is affordable up to 2^16 subsets;
    // above that the terms are streamed through the compensated sum as is.
    const bool sort_terms = m <= 16;
    std::vector<std::vector<long double>> per_rate(sort_terms ? m : 0);
    std::vector<CompensatedSum<long double>> streamed(m);
    for (const auto& s : subsets_) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!(s.mask >> j & 1u)) continue;
            long double term = s.weight;
            for (std::size_t k = 0; k < m; ++k) {
                if (k != j && (s.mask >> k & 1u)) term *= theta[j * m + k];
            }
            if (sort_terms) {
                per_rate[j].push_back(term);
            } else {
                streamed[j].add(term);
            }
        }
    }
    collected_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        collected_[j] = sort_terms ? sorted_sum(per_rate[j]) : streamed[j].value();
    }
}

std::vector<ExponentialTerm> DefectiveCdf::expansion(std::uint32_t mask) const {
    std::vector<ExponentialTerm> out;
    const std::size_t m = rates_.size();
    for (std::size_t j = 0; j < m; ++j) {
        if (!(mask >> j & 1u)) continue;
        long double coef = 1.0L;
        const long double rj = rates_[j];
        for (std::size_t k = 0; k < m; ++k) {
            if (k == j || !(mask >> k & 1u)) continue;
            const long double rk = rates_[k];
            coef *= rk / (rk - rj);
        }
        out.push_back({static_cast<double>(coef), rates_[j]});
    }
    return out;
}

double DefectiveCdf::operator()(double gamma) const {
    if (!(gamma > 0.0)) return 0.0;
    if (std::isinf(gamma)) return limit();
    std::vector<long double> terms(rates_.size());
    for (std::size_t j = 0; j < rates_.size(); ++j) {
        terms[j] = collected_[j] * -std::expm1(-static_cast<long double>(rates_[j]) * gamma);
    }
    return static_cast<double>(sorted_sum(terms));
}

DefectiveCdf relay_sum_cdf(std::span<const GatedExponential> gates, TiePolicy ties) {
    check_gates(gates);
    const std::size_t m = gates.size();
    if (m > kMaxClosedFormRelays) {
        throw SizeError("closed-form relay sum limited to " + std::to_string(kMaxClosedFormRelays) +
                        " relays; use the numerical relay-sum path");
    }
    std::vector<double> raw(m);
    for (std::size_t i = 0; i < m; ++i) raw[i] = gates[i].rate;
    std::vector<double> rates = resolve_ties(raw, ties);

    const std::uint32_t full = (m == 32) ? ~0u : ((1u << m) - 1u);
    std::vector<SubsetTerm> subsets;
    subsets.reserve(full);
    for (std::uint32_t mask = 1; mask <= full && mask != 0; ++mask) {
        long double w = 1.0L;
        for (std::size_t i = 0; i < m; ++i) {
            const long double a = gates[i].gate_prob;
            w *= (mask >> i & 1u) ? 1.0L - a : a;
        }
        subsets.push_back({mask, static_cast<double>(w)});
    }
    return DefectiveCdf(std::move(subsets), std::move(rates), empty_set_prob(gates));
}

NumericalRelaySumCdf::NumericalRelaySumCdf(std::span<const GatedExponential> gates, double gamma_max,
                                           std::size_t steps)
    : step_(0.0), gamma_max_(gamma_max), empty_prob_(0.0) {
    check_gates(gates);
    if (!(gamma_max > 0.0) || !std::isfinite(gamma_max)) throw DomainError("gamma_max must be positive");
    if (steps < 1) throw DomainError("need at least one grid step");
    step_ = gamma_max / static_cast<double>(steps);
    empty_prob_ = empty_set_prob(gates);

    // grid_cdf_[n] = Pr{sum of paths so far <= n h}; starts as the empty sum.
    grid_cdf_.assign(steps + 1, 1.0);
    std::vector<double> next(steps + 1);
    for (const auto& g : gates) {
        // I(t) = int_0^t G(u) rate e^{-rate (t - u)} du, advanced one cell at a
        // time with G linear inside the cell.
        const double x = g.rate * step_;
        const double decay = std::exp(-x);
        const double a = one_minus_exp_neg(x);
        double tail;  // (1 - e^{-x}(1 + x)) / x
        if (x < 1e-3) {
            tail = x / 2.0 - x * x / 3.0 + x * x * x / 8.0 - x * x * x * x / 30.0;
        } else {
            tail = (a - x * decay) / x;
        }
        const double b = a - tail;
        double integral = 0.0;
        next[0] = g.gate_prob * grid_cdf_[0];
        for (std::size_t n = 0; n < steps; ++n) {
            integral = decay * integral + grid_cdf_[n] * (a - b) + grid_cdf_[n + 1] * b;
            next[n + 1] = g.gate_prob * grid_cdf_[n + 1] + (1.0 - g.gate_prob) * integral;
        }
        grid_cdf_.swap(next);
    }
}

double NumericalRelaySumCdf::operator()(double gamma) const {
    if (!(gamma > 0.0)) return 0.0;
    const std::size_t last = grid_cdf_.size() - 1;
    double full;
    if (gamma >= gamma_max_) {
        full = grid_cdf_[last];
    } else {
        const double pos = gamma / step_;
        const auto n = std::min(static_cast<std::size_t>(pos), last - 1);
        const double frac = pos - static_cast<double>(n);
        full = grid_cdf_[n] + frac * (grid_cdf_[n + 1] - grid_cdf_[n]);
    }
    return full - empty_prob_;
}

double BinnedPmf::total() const {
    CompensatedSum<double> acc;
    for (double b : bins) acc.add(b);
    return acc.value();
}

BinnedPmf bin_relay_sum(const DefectiveCdf& cdf, double gamma_th, int granularity) {
    return bin_cdf(cdf, gamma_th, granularity);
}

BinnedPmf bin_relay_sum(const NumericalRelaySumCdf& cdf, double gamma_th, int granularity) {
    return bin_cdf(cdf, gamma_th, granularity);
}

BinnedPmf bin_conditional_direct(const LinkParam& link, double gamma_th, int granularity) {
    if (granularity < 1) throw DomainError("granularity must be >= 1");
    if (!(gamma_th > 0.0)) throw ConditioningError("conditioning on gamma < 0 is undefined");
    BinnedPmf out;
    out.gamma_th = gamma_th;
    out.bins.resize(static_cast<std::size_t>(granularity));
    const double n = granularity;
    const double rate = link.rate_lambda;
    if (rate == 0.0) {
        // Noiseless limit of the truncated exponential is uniform.
        std::fill(out.bins.begin(), out.bins.end(), 1.0 / n);
        return out;
    }
    const double width = gamma_th / n;
    const double norm = one_minus_exp_neg(rate * gamma_th);
    const double cell = one_minus_exp_neg(rate * width);
    for (int j = 1; j <= granularity; ++j) {
        out.bins[j - 1] = std::exp(-rate * width * (j - 1)) * cell / norm;
    }
    return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

double step2_outage(const BinnedPmf& relay_pmf, const BinnedPmf& direct_pmf,
                    std::span<const GatedExponential> gates) {
    if (relay_pmf.granularity() != direct_pmf.granularity() || relay_pmf.gamma_th != direct_pmf.gamma_th) {
        throw DomainError("relay and direct PMFs must share gamma_th and granularity");
    }
    const double empty = empty_set_prob(gates);
    if (!(empty < 1.0)) throw ConditioningError("no relay can decode: decode set is always empty");
    const auto combined = convolve(relay_pmf.bins, direct_pmf.bins);
    CompensatedSum<double> acc;
    for (std::size_t k = 0; k < relay_pmf.granularity(); ++k) acc.add(combined[k]);
    return std::clamp(acc.value() / (1.0 - empty), 0.0, 1.0);
}

SourceOutages source_outages(const LinkRates& rates, double gamma_th, int granularity, Source source,
                             const AnalyticOptions& options) {
    SourceOutages out;
    const LinkParam& direct = rates.direct(source);
    if (direct.rate_lambda == 0.0) return out;  // noiseless limit: nothing ever fails
    out.step1 = direct_outage(direct, gamma_th);
    const auto gates = relay_paths(rates, gamma_th, source);
    out.empty_set_prob = empty_set_prob(gates);
    if (gamma_th == 0.0) return out;

    const BinnedPmf direct_pmf = bin_conditional_direct(direct, gamma_th, granularity);
    const bool numerical = options.numerical_relay_sum || gates.size() > kMaxClosedFormRelays;
    if (numerical && !options.numerical_relay_sum) {
        throw SizeError("more than " + std::to_string(kMaxClosedFormRelays) +
                        " relays requires the numerical relay-sum path");
    }
    BinnedPmf relay_pmf;
    if (numerical) {
        const NumericalRelaySumCdf cdf(gates, gamma_th, options.numerical_steps);
        relay_pmf = bin_relay_sum(cdf, gamma_th, granularity);
    } else {
        const DefectiveCdf cdf = relay_sum_cdf(gates, options.ties);
        relay_pmf = bin_relay_sum(cdf, gamma_th, granularity);
    }
    out.step2 = step2_outage(relay_pmf, direct_pmf, gates);
    return out;
}

StepOutageSet step_outages(const NetworkTopology& topology, const SystemConfig& config,
                           const AnalyticOptions& options) {
    topology.validate();
    config.validate();
    const LinkRates rates = link_rates(topology, config);
    const double gth = config.gamma_th();
    const SourceOutages s1 = source_outages(rates, gth, config.granularity, Source::S1, options);
    const SourceOutages s2 = source_outages(rates, gth, config.granularity, Source::S2, options);
    StepOutageSet out;
    out.op_pIS1s1 = s1.step1;
    out.op_pIS1s2 = s1.step2;
    out.op_pIIS1s1 = out.op_pIS1s1;
    out.op_pIIS1s2 = out.op_pIS1s2;
    out.op_pIIS2s1 = s2.step1;
    out.op_pIIS2s2 = s2.step2;
    out.empty_set_prob_s1 = s1.empty_set_prob;
    out.empty_set_prob_s2 = s2.empty_set_prob;
    return out;
}

}  // namespace mdma
