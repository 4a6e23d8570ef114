// Independent reference computations used by the test suites. Nothing here
// goes through the partial-fraction expansion or the library RNG.
#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "mdma/analytic.hpp"
#include "mdma/topology.hpp"

namespace oracle {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

inline double integrate(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return GK::integrate(f, a, b, 8, 1e-11);
}

/// Pr{sum of independent exponentials with the given rates <= x}, by nested
/// adaptive quadrature over the first summand.
inline double hypoexp_cdf(std::span<const double> rates, double x) {
    if (x <= 0.0) return rates.empty() ? 1.0 : 0.0;
    if (rates.empty()) return 1.0;
    if (rates.size() == 1) return -std::expm1(-rates[0] * x);
    const double l = rates[0];
    const auto rest = rates.subspan(1);
    return integrate([&](double t) { return l * std::exp(-l * t) * hypoexp_cdf(rest, x - t); }, 0.0, x);
}

/// Defective CDF of the relay sum: mixture over nonempty decode sets.
inline double subset_mixture_cdf(const std::vector<mdma::GatedExponential>& g, double x) {
    const std::size_t m = g.size();
    double total = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        double w = 1.0;
        std::vector<double> rates;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                w *= 1.0 - g[i].gate_prob;
                rates.push_back(g[i].rate);
            } else {
                w *= g[i].gate_prob;
            }
        }
        if (w != 0.0) total += w * hypoexp_cdf(rates, x);
    }
    return total;
}

/// Pr{X + Y < gth | X < gth} for X ~ Exp(lam_d), Y ~ Exp(lam_r), as a 2-D integral.
inline double single_relay_step2(double lam_d, double lam_r, double gth) {
    const double norm = -std::expm1(-lam_d * gth);
    return integrate(
               [&](double x) {
                   const double inner =
                       integrate([&](double y) { return lam_r * std::exp(-lam_r * y); }, 0.0, gth - x);
                   return lam_d * std::exp(-lam_d * x) * inner;
               },
               0.0, gth) /
           norm;
}

struct Count {
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    double p() const { return n ? double(hits) / double(n) : 0.0; }
};

/// |observed - expected| within 3 sigma, sigma the larger of the binomial
/// spread under the expected and under the observed proportion.
inline bool within_3sigma(double expected, const Count& c, double k = 3.0) {
    const double n = double(c.n);
    const double p0 = std::clamp(expected, 0.0, 1.0);
    const double s = std::max(std::sqrt(p0 * (1 - p0) / n), std::sqrt(c.p() * (1 - c.p()) / n));
    return std::abs(c.p() - expected) <= k * s;
}

/// Conditional step-2 sampling with the standard library generator: direct
/// SNR below threshold, decode set nonempty.
inline Count conditional_step2(const mdma::LinkRates& r, double gth, mdma::Source src, std::uint64_t n,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lam = r.direct(src).rate_lambda;
    const auto& sr = r.to_relays(src);
    Count c;
    while (c.n < n) {
        double x;
        do {
            x = std::exponential_distribution<double>(lam)(rng);
        } while (x >= gth);
        bool any = false;
        double sum = x;
        while (!any) {
            sum = x;
            for (std::size_t i = 0; i < sr.size(); ++i) {
                if (std::exponential_distribution<double>(sr[i].rate_lambda)(rng) >= gth) {
                    any = true;
                    sum += std::exponential_distribution<double>(r.rd[i].rate_lambda)(rng);
                }
            }
        }
        ++c.n;
        if (sum < gth) ++c.hits;
    }
    return c;
}

/// Bins each gated exponential on its own (point mass in bin 0), convolves
/// the per-path PMFs, removes the empty-set mass and returns the total
/// variation distance to `relay` over bins 1..N.
inline double binned_convolution_tv(const std::vector<mdma::GatedExponential>& g, const mdma::BinnedPmf& relay) {
    const std::size_t n = relay.granularity();
    const double h = relay.gamma_th / double(n);
    std::vector<double> acc{1.0};
    double empty = 1.0;
    for (const auto& p : g) {
        std::vector<double> path(n + 1);
        path[0] = p.gate_prob;
        for (std::size_t j = 1; j <= n; ++j) {
            path[j] = (1 - p.gate_prob) * (std::exp(-p.rate * (j - 1) * h) - std::exp(-p.rate * j * h));
        }
        std::vector<double> next(std::min(acc.size() + n, n + 1), 0.0);
        for (std::size_t a = 0; a < acc.size(); ++a) {
            for (std::size_t b = 0; a + b < next.size(); ++b) next[a + b] += acc[a] * path[b];
        }
        acc.swap(next);
        empty *= p.gate_prob;
    }
    acc[0] -= empty;
    double tv = std::abs(acc[0]);
    for (std::size_t j = 1; j <= n; ++j) tv += std::abs(acc[j] - relay.bins[j - 1]);
    return tv;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

}  // namespace oracle
