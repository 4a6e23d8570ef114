#include "mdma/topology.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mdma/error.hpp"

namespace mdma {

namespace {

bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double checked_distance(const Point& a, const Point& b, const char* link) {
    const double dist = distance(a, b);
    if (!(dist > 0.0)) {
        throw GeometryError(std::string("degenerate geometry: zero-length link ") + link);
    }
    return dist;
}

}  // namespace

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void NetworkTopology::validate() const {
    if (relays.empty()) throw GeometryError("topology needs at least one relay");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw GeometryError("alpha must be positive");
    if (!finite(s1) || !finite(s2) || !finite(d)) throw GeometryError("non-finite node position");
    for (const auto& r : relays) {
        if (!finite(r)) throw GeometryError("non-finite relay position");
    }
    (void)distances(*this);
}

int robust_ceil(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

void SystemConfig::validate() const {
    if (std::isnan(power_dbm) || std::isnan(noise_dbm)) throw ConfigError("power/noise must be numbers");
    if (!(snr_linear() > 0.0)) throw ConfigError("linear SNR must be positive");
    if (!(rate_r0 > 0.0) || !std::isfinite(rate_r0)) throw ConfigError("rate_r0 must be positive");
    if (!(total_bits > 0.0) || !std::isfinite(total_bits)) throw ConfigError("total_bits must be positive");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
    if (granularity < 1) throw ConfigError("granularity must be >= 1");
    if (!(bandwidth_units > 0.0) || !(power_units > 0.0)) {
        throw ConfigError("bandwidth_units and power_units must be positive");
    }
    if (beta_s() + beta_p() < 1) throw ConfigError("beta_s + beta_p must be >= 1");
}

double SystemConfig::snr_linear() const { return std::pow(10.0, (power_dbm - noise_dbm) / 10.0); }

double SystemConfig::gamma_th() const { return std::exp2(rate_r0) - 1.0; }

int SystemConfig::beta_s() const { return robust_ceil(eta * total_bits / rate_r0); }

int SystemConfig::beta_p() const { return robust_ceil((1.0 - eta) * total_bits / rate_r0); }

LinkDistances distances(const NetworkTopology& t) {
    LinkDistances out;
    out.s1d = checked_distance(t.s1, t.d, "S1-D");
    out.s2d = checked_distance(t.s2, t.d, "S2-D");
    out.s1r.reserve(t.relays.size());
    out.s2r.reserve(t.relays.size());
    out.rd.reserve(t.relays.size());
    for (const auto& r : t.relays) {
        out.s1r.push_back(checked_distance(t.s1, r, "S1-R"));
        out.s2r.push_back(checked_distance(t.s2, r, "S2-R"));
        out.rd.push_back(checked_distance(r, t.d, "R-D"));
    }
    return out;
}

LinkParam LinkParam::from_distance(double d, double alpha, double snr) {
    if (!(d > 0.0)) throw GeometryError("link distance must be positive");
    if (!(snr > 0.0)) throw DomainError("SNR must be positive");
    return LinkParam{std::isinf(snr) ? 0.0 : std::pow(d, alpha) / snr};
}

double LinkParam::mean_snr() const {
    return rate_lambda > 0.0 ? 1.0 / rate_lambda : std::numeric_limits<double>::infinity();
}

LinkRates link_rates(const NetworkTopology& topology, const SystemConfig& config) {
    const LinkDistances dist = distances(topology);
    const double snr = config.snr_linear();
    const double a = topology.alpha;
    LinkRates out;
    out.s1d = LinkParam::from_distance(dist.s1d, a, snr);
    out.s2d = LinkParam::from_distance(dist.s2d, a, snr);
    for (std::size_t i = 0; i < dist.rd.size(); ++i) {
        out.s1r.push_back(LinkParam::from_distance(dist.s1r[i], a, snr));
        out.s2r.push_back(LinkParam::from_distance(dist.s2r[i], a, snr));
        out.rd.push_back(LinkParam::from_distance(dist.rd[i], a, snr));
    }
    return out;
}

std::vector<Point> column_relays(std::size_t m) {
    std::vector<Point> out;
    out.reserve(m);
    const double md = static_cast<double>(m);
    for (std::size_t i = 1; i <= m; ++i) {
        out.push_back({50.0, 50.0 - 100.0 * (static_cast<double>(i) - 0.5) / md + 5.0});
    }
    return out;
}

Setup default_paper_setup() {
    Setup s;
    s.topology.s1 = {20.0, 20.0};
    s.topology.s2 = {0.0, 20.0};
    s.topology.d = {100.0, 0.0};
    s.topology.relays = column_relays(8);
    s.topology.alpha = 3.0;
    s.config.rate_r0 = 1.0;
    s.config.total_bits = 10.0;
    s.config.noise_dbm = -50.0;
    return s;
}

}  // namespace mdma
