#include "mdma/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "mdma/analytic.hpp"
#include "mdma/error.hpp"

namespace mdma {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr std::size_t kMaxSimRelays = 64;

void merge_into(SimEstimate& into, const SimEstimate& part) {
    into.slots += part.slots;
    into.outage.merge(part.outage);
    for (std::size_t k = 0; k < kStepKinds; ++k) into.step_outage[k].merge(part.step_outage[k]);
    into.empty_set_s1.merge(part.empty_set_s1);
    into.empty_set_s2.merge(part.empty_set_s2);
    into.pairs += part.pairs;
    if (into.occupancy_counts.size() < part.occupancy_counts.size()) {
        into.occupancy_counts.resize(part.occupancy_counts.size(), 0);
    }
    for (std::size_t i = 0; i < part.occupancy_counts.size(); ++i) {
        into.occupancy_counts[i] += part.occupancy_counts[i];
    }
}

// Runs `block(rng, first_slot, count, trace_budget, out)` over fixed-size
// blocks, possibly on several threads, and merges in block order.
template <typename BlockFn>
SimEstimate run_blocks(const SimOptions& options, SimEstimate prototype, BlockFn block) {
    if (options.slots < 1) throw DomainError("simulation needs at least one slot");
    if (options.block_slots < 1) throw DomainError("block size must be positive");
    const std::uint64_t n_blocks = (options.slots + options.block_slots - 1) / options.block_slots;
    std::vector<SimEstimate> parts(n_blocks);

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_blocks));
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t b = next++; b < n_blocks; b = next++) {
            const std::uint64_t first = b * options.block_slots;
            const std::uint64_t count = std::min(options.block_slots, options.slots - first);
            const std::size_t budget =
                first < options.trace_cap ? static_cast<std::size_t>(std::min<std::uint64_t>(options.trace_cap - first, count)) : 0;
            RngStream rng(derive_seed(options.seed, b));
            block(rng, first, count, budget, parts[b]);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SimEstimate out = std::move(prototype);
    for (auto& part : parts) {
        merge_into(out, part);
        for (auto& ev : part.trace) out.trace.push_back(std::move(ev));
    }
    return out;
}

void check_relays(const NetworkTopology& topology) {
    if (topology.relay_count() > kMaxSimRelays) {
        throw ConfigError("the simulator supports at most 64 relays");
    }
}

// Single-source cooperative protocol driven by a ProtocolLayout; one
// attempt per slot. Shared by MDMA and TDMA.
SimEstimate run_layout(Scheme scheme, const NetworkTopology& topology, const SystemConfig& config,
                       const ProtocolLayout& layout, const SimOptions& options) {
    topology.validate();
    config.validate();
    check_relays(topology);
    const LinkRates rates = link_rates(topology, config);
    const double gth = config.gamma_th();
    const std::size_t m = topology.relay_count();

    SimEstimate proto;
    proto.scheme = scheme;
    proto.bandwidth_units = config.bandwidth_units;
    proto.power_units = config.power_units;
    for (const auto& s : layout.states()) proto.state_labels.push_back(s.label());

    auto block = [&](RngStream& rng, std::uint64_t first, std::uint64_t count, std::size_t budget,
                     SimEstimate& out) {
        out.occupancy_counts.assign(layout.size(), 0);
        std::size_t state = layout.initial();
        double retained = 0.0;
        std::uint64_t mask = 0;
        std::vector<double> relay_snrs;
        for (std::uint64_t t = 0; t < count; ++t) {
            const ProtocolState& s = layout.state(state);
            const Source src = phase_source(s.phase);
            ++out.occupancy_counts[state];
            bool success = false;
            double total = 0.0;
            std::size_t next = state;
            relay_snrs.clear();
            if (s.step == 1) {
                const double direct = draw_link_snr(rates.direct(src), rng);
                mask = 0;
                if (options.relay_cooperation) {
                    const auto& links = rates.to_relays(src);
                    for (std::size_t i = 0; i < m; ++i) {
                        if (draw_link_snr(links[i], rng) >= gth) mask |= std::uint64_t{1} << i;
                    }
                }
                Proportion& empty = src == Source::S1 ? out.empty_set_s1 : out.empty_set_s2;
                ++empty.trials;
                if (mask == 0) ++empty.hits;
                total = direct;
                success = direct >= gth;
                if (success) {
                    next = layout.after_success(state);
                } else if (mask == 0) {
                    next = layout.after_empty_failure(state);
                } else {
                    retained = direct;
                    next = layout.after_relay_handoff(state);
                }
            } else {
                total = retained;
                for (std::size_t i = 0; i < m; ++i) {
                    if (!(mask >> i & 1u)) continue;
                    const double g = draw_link_snr(rates.rd[i], rng);
                    relay_snrs.push_back(g);
                    total += g;
                }
                success = total >= gth;
                next = success ? layout.after_success(state) : layout.after_step2_failure(state);
            }
            ++out.outage.trials;
            Proportion& kind = out.step_outage[step_kind(s.phase, s.step)];
            ++kind.trials;
            if (!success) {
                ++out.outage.hits;
                ++kind.hits;
            }
            if (success && layout.completes_cycle(state)) ++out.pairs;
            if (t < budget) {
                SlotEvent ev;
                ev.slot = first + t;
                ev.scheme = scheme;
                ev.state = s.label();
                ev.success = success;
                ev.mrc_total = total;
                ev.retained_direct = s.step == 2 ? retained : 0.0;
                ev.relay_snrs = relay_snrs;
                ev.decode_set = mask;
                out.trace.push_back(std::move(ev));
            }
            state = next;
        }
        out.slots = count;
    };
    return run_blocks(options, std::move(proto), block);
}

// Two concurrently served streams (S1 and S2), each needing `need`
// successful receptions per image. A stream that finishes its image idles
// until the other one does; then the pair is counted and both restart.
struct Stream {
    Source source;
    int step = 1;
    int done = 0;
    double retained = 0.0;
    std::uint64_t mask = 0;

    bool idle(int need) const { return done >= need; }
};

struct Attempt {
    double signal = 0.0;  // received signal SNR (sum over transmitters)
    double mean_signal = 0.0;
    double metric = 0.0;  // what the decision is made on
    bool success = false;
    std::vector<double> relay_snrs;
};

SimEstimate run_two_streams(Scheme scheme, const NetworkTopology& topology, const SystemConfig& config,
                            const SimOptions& options) {
    topology.validate();
    config.validate();
    check_relays(topology);
    if (!(options.noma_power_split > 0.0 && options.noma_power_split < 1.0)) {
        throw ConfigError("NOMA power split must lie in (0, 1)");
    }
    const LinkRates rates = link_rates(topology, config);
    const double gth = config.gamma_th();
    const std::size_t m = topology.relay_count();
    const int need = robust_ceil(config.total_bits / config.rate_r0);
    const bool noma = scheme == Scheme::NOMA;
    const double share[2] = {noma ? options.noma_power_split : 1.0, noma ? 1.0 - options.noma_power_split : 1.0};

    SimEstimate proto;
    proto.scheme = scheme;
    const double resource_scale = scheme == Scheme::FDMA ? 2.0 : 1.0;
    proto.bandwidth_units = config.bandwidth_units * resource_scale;
    proto.power_units = config.power_units * resource_scale;

    // Index of the stream decoded first; ties go to S1.
    auto stronger = [&](double x0, double x1, double mean0, double mean1) {
        if (options.sic_order == SicOrder::Instantaneous) return x0 >= x1 ? 0 : 1;
        return mean0 >= mean1 ? 0 : 1;
    };

    auto block = [&](RngStream& rng, std::uint64_t first, std::uint64_t count, std::size_t budget,
                     SimEstimate& out) {
        Stream streams[2] = {{Source::S1}, {Source::S2}};
        std::vector<double> rd(m, 0.0);
        std::vector<bool> rd_drawn(m, false);
        for (std::uint64_t t = 0; t < count; ++t) {
            Attempt att[2];
            bool active[2];
            for (int k = 0; k < 2; ++k) active[k] = !streams[k].idle(need);

            // Signals at the destination.
            std::fill(rd_drawn.begin(), rd_drawn.end(), false);
            for (int k = 0; k < 2; ++k) {
                if (!active[k]) continue;
                Stream& st = streams[k];
                if (st.step == 1) {
                    att[k].signal = share[k] * draw_link_snr(rates.direct(st.source), rng);
                    att[k].mean_signal = share[k] * rates.direct(st.source).mean_snr();
                } else {
                    for (std::size_t i = 0; i < m; ++i) {
                        if (!(st.mask >> i & 1u)) continue;
                        // A relay's channel to D is shared by both NOMA streams in a slot;
                        // FDMA bands fade independently.
                        double g;
                        if (noma && rd_drawn[i]) {
                            g = rd[i];
                        } else {
                            g = draw_link_snr(rates.rd[i], rng);
                            rd[i] = g;
                            rd_drawn[i] = true;
                        }
                        att[k].relay_snrs.push_back(share[k] * g);
                        att[k].signal += share[k] * g;
                        att[k].mean_signal += share[k] * rates.rd[i].mean_snr();
                    }
                }
            }

            // Decisions at the destination.
            auto metric = [&](int k, double sinr) {
                return (streams[k].step == 2 ? streams[k].retained : 0.0) + sinr;
            };
            double sinr[2] = {0.0, 0.0};
            if (noma && active[0] && active[1]) {
                const int a = stronger(att[0].signal, att[1].signal, att[0].mean_signal, att[1].mean_signal);
                const int b = 1 - a;
                sinr[a] = att[a].signal / (att[b].signal + 1.0);
                att[a].metric = metric(a, sinr[a]);
                att[a].success = att[a].metric >= gth;
                sinr[b] = att[a].success ? att[b].signal : att[b].signal / (att[a].signal + 1.0);
                att[b].metric = metric(b, sinr[b]);
                att[b].success = att[b].metric >= gth;
            } else {
                for (int k = 0; k < 2; ++k) {
                    if (!active[k]) continue;
                    sinr[k] = att[k].signal;
                    att[k].metric = metric(k, sinr[k]);
                    att[k].success = att[k].metric >= gth;
                }
            }

            // Decode sets of the step-1 broadcasts. Under NOMA a relay that is
            // forwarding in this slot cannot receive, and the relays separate the
            // two broadcasts with the same cancellation rule as the destination.
            std::uint64_t busy = 0;
            if (noma) {
                for (int k = 0; k < 2; ++k) {
                    if (active[k] && streams[k].step == 2) busy |= streams[k].mask;
                }
            }
            std::uint64_t new_mask[2] = {0, 0};
            const bool broadcasting[2] = {active[0] && streams[0].step == 1, active[1] && streams[1].step == 1};
            if (options.relay_cooperation) {
                for (std::size_t i = 0; i < m; ++i) {
                    if (noma && (busy >> i & 1u)) continue;
                    double v[2] = {0.0, 0.0};
                    double v_mean[2] = {0.0, 0.0};
                    for (int k = 0; k < 2; ++k) {
                        if (!broadcasting[k]) continue;
                        const LinkParam& link = rates.to_relays(streams[k].source)[i];
                        v[k] = share[k] * draw_link_snr(link, rng);
                        v_mean[k] = share[k] * link.mean_snr();
                    }
                    bool ok[2] = {false, false};
                    if (noma && broadcasting[0] && broadcasting[1]) {
                        const int a = stronger(v[0], v[1], v_mean[0], v_mean[1]);
                        const int b = 1 - a;
                        ok[a] = v[a] / (v[b] + 1.0) >= gth;
                        ok[b] = (ok[a] ? v[b] : v[b] / (v[a] + 1.0)) >= gth;
                    } else {
                        for (int k = 0; k < 2; ++k) ok[k] = broadcasting[k] && v[k] >= gth;
                    }
                    for (int k = 0; k < 2; ++k) {
                        if (ok[k]) new_mask[k] |= std::uint64_t{1} << i;
                    }
                }
            }

            // Bookkeeping.
            for (int k = 0; k < 2; ++k) {
                if (!active[k]) continue;
                Stream& st = streams[k];
                const Phase phase = k == 0 ? Phase::PhaseII_S1 : Phase::PhaseII_S2;
                const bool success = att[k].success;
                const int step = st.step;
                const double retained = st.retained;
                const std::uint64_t mask_used = step == 1 ? new_mask[k] : st.mask;
                ++out.outage.trials;
                Proportion& kind = out.step_outage[step_kind(phase, step)];
                ++kind.trials;
                if (!success) {
                    ++out.outage.hits;
                    ++kind.hits;
                }
                if (step == 1) {
                    Proportion& empty = k == 0 ? out.empty_set_s1 : out.empty_set_s2;
                    ++empty.trials;
                    if (new_mask[k] == 0) ++empty.hits;
                    if (success) {
                        ++st.done;
                    } else if (new_mask[k] != 0) {
                        st.step = 2;
                        st.mask = new_mask[k];
                        st.retained = sinr[k];
                    }
                } else {
                    st.step = 1;
                    if (success) ++st.done;
                }
                if (out.trace.size() < budget * 2 && t < budget) {
                    SlotEvent ev;
                    ev.slot = first + t;
                    ev.scheme = scheme;
                    ev.state = std::string(k == 0 ? "S1" : "S2") + "s" + std::to_string(step) + "," +
                               std::to_string(st.done + (success ? 0 : 1));
                    ev.success = success;
                    ev.mrc_total = att[k].metric;
                    ev.retained_direct = step == 2 ? retained : 0.0;
                    ev.relay_snrs = att[k].relay_snrs;
                    ev.decode_set = mask_used;
                    out.trace.push_back(std::move(ev));
                }
            }
            if (streams[0].idle(need) && streams[1].idle(need)) {
                ++out.pairs;
                for (auto& st : streams) st = Stream{st.source};
            }
        }
        out.slots = count;
    };
    return run_blocks(options, std::move(proto), block);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t RngStream::next() {
    ++position_;
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

double RngStream::exponential(double rate) {
    const double u = uniform();
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(u) / rate;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed ^ (0x6a09e667f3bcc909ULL * (index + 1));
    splitmix64(x);
    return splitmix64(x);
}

double draw_link_snr(const LinkParam& link, RngStream& rng) { return rng.exponential(link.rate_lambda); }

const char* scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::MDMA: return "MDMA";
        case Scheme::TDMA: return "TDMA";
        case Scheme::FDMA: return "FDMA";
        case Scheme::NOMA: return "NOMA";
    }
    return "?";
}

Scheme parse_scheme(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "mdma") return Scheme::MDMA;
    if (lower == "tdma") return Scheme::TDMA;
    if (lower == "fdma") return Scheme::FDMA;
    if (lower == "noma") return Scheme::NOMA;
    throw ConfigError("unknown scheme '" + std::string(text) + "'");
}

double Proportion::estimate() const {
    return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
}

double Proportion::standard_error() const {
    if (trials == 0) return 0.0;
    const double p = estimate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

std::size_t step_kind(Phase phase, int step) {
    return 2 * static_cast<std::size_t>(phase) + static_cast<std::size_t>(step - 1);
}

double SimEstimate::slot_cost() const {
    const std::uint64_t successes = outage.trials - outage.hits;
    if (successes == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(outage.trials) / static_cast<double>(successes);
}

double SimEstimate::slot_cost_stderr() const {
    const double q = 1.0 - outage.estimate();
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    return outage.standard_error() / (q * q);
}

double SimEstimate::slots_per_pair() const {
    if (pairs == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(slots) / static_cast<double>(pairs);
}

double SimEstimate::efficiency() const {
    if (slots == 0) return 0.0;
    return 2.0 * static_cast<double>(pairs) / (static_cast<double>(slots) * bandwidth_units * power_units);
}

double SimEstimate::efficiency_stderr() const {
    const double q = 1.0 - outage.estimate();
    if (q <= 0.0) return 0.0;
    return efficiency() * outage.standard_error() / q;
}

std::vector<double> SimEstimate::occupancy() const {
    std::vector<double> out(occupancy_counts.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<double>(occupancy_counts[i]) / static_cast<double>(slots);
    }
    return out;
}

SimEstimate run_mdma(const NetworkTopology& topology, const SystemConfig& config, const SimOptions& options) {
    config.validate();
    const ProtocolLayout layout(config.beta_s(), config.beta_p(), options.chain);
    return run_layout(Scheme::MDMA, topology, config, layout, options);
}

SimEstimate run_baseline(Scheme scheme, const NetworkTopology& topology, const SystemConfig& config,
                         const SimOptions& options) {
    switch (scheme) {
        case Scheme::TDMA: {
            SystemConfig tdma = config;
            tdma.eta = 0.0;
            tdma.validate();
            const ProtocolLayout layout(0, tdma.beta_p(), options.chain);
            return run_layout(Scheme::TDMA, topology, tdma, layout, options);
        }
        case Scheme::FDMA:
        case Scheme::NOMA: return run_two_streams(scheme, topology, config, options);
        case Scheme::MDMA: break;
    }
    throw ConfigError("MDMA is not a baseline scheme");
}

SimEstimate simulate(Scheme scheme, const NetworkTopology& topology, const SystemConfig& config,
                     const SimOptions& options) {
    return scheme == Scheme::MDMA ? run_mdma(topology, config, options)
                                  : run_baseline(scheme, topology, config, options);
}

}  // namespace mdma
