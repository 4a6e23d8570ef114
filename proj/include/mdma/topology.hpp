#pragma once

#include <cstddef>
#include <vector>

namespace mdma {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Point& a, const Point& b);

/// Node placement for the two-source, m-relay, single-destination network.
struct NetworkTopology {
    Point s1;
    Point s2;
    Point d;
    std::vector<Point> relays;
    double alpha = 3.0;  // path-loss exponent

    std::size_t relay_count() const { return relays.size(); }

    /// Throws GeometryError on an empty relay set, non-finite coordinates,
    /// non-positive alpha, or any link whose endpoints coincide.
    void validate() const;
};

enum class Source { S1, S2 };

/// Link-level and protocol parameters. Powers are in dBm; everything derived
/// from them is in linear units.
struct SystemConfig {
    double power_dbm = 10.0;
    double noise_dbm = -50.0;
    double rate_r0 = 1.0;       // bit/s/Hz
    double total_bits = 10.0;   // bits per image
    double eta = 0.5;           // shared-information ratio
    int granularity = 1000;     // bins over [0, gamma_th]
    double bandwidth_units = 1.0;
    double power_units = 1.0;

    void validate() const;

    /// P_S / N_0. Infinite when noise_dbm is -inf (noiseless limit).
    double snr_linear() const;
    /// Decoding threshold 2^R0 - 1.
    double gamma_th() const;
    int beta_s() const;
    int beta_p() const;
};

/// Ceiling that ignores floating noise below 1e-9, so that e.g.
/// (1 - 0.7) * 10 = 3.0000000000000004 maps to 3 rather than 4.
int robust_ceil(double x);

/// Every distance a link in the network uses.
struct LinkDistances {
    double s1d = 0.0;
    double s2d = 0.0;
    std::vector<double> s1r;
    std::vector<double> s2r;
    std::vector<double> rd;
};

LinkDistances distances(const NetworkTopology& topology);

/// Rate of the exponentially distributed SNR on one link: d^alpha / SNR.
/// Zero is the noiseless limit (the link SNR is infinite).
struct LinkParam {
    double rate_lambda = 1.0;

    static LinkParam from_distance(double d, double alpha, double snr);
    double mean_snr() const;
};

/// Per-link rates for the whole network, derived once from a topology and
/// a config.
struct LinkRates {
    LinkParam s1d;
    LinkParam s2d;
    std::vector<LinkParam> s1r;
    std::vector<LinkParam> s2r;
    std::vector<LinkParam> rd;

    const LinkParam& direct(Source s) const { return s == Source::S1 ? s1d : s2d; }
    const std::vector<LinkParam>& to_relays(Source s) const {
        return s == Source::S1 ? s1r : s2r;
    }
};

LinkRates link_rates(const NetworkTopology& topology, const SystemConfig& config);

/// Relay i (1-based) of an m-relay column at x = 50: y = 50 - 100(i - 0.5)/m + 5.
std::vector<Point> column_relays(std::size_t m);

struct Setup {
    NetworkTopology topology;
    SystemConfig config;
};

/// S1 = (20,20), S2 = (0,20), D = (100,0), eight column relays, alpha = 3,
/// R0 = 1, Bt = 10, N0 = -50 dBm.
Setup default_paper_setup();

}  // namespace mdma
