#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mdma/markov.hpp"
#include "mdma/topology.hpp"

namespace mdma {

/// xoshiro256** seeded through splitmix64. Only integer arithmetic and
/// std::log are involved, so a given seed produces the same stream on every
/// conforming platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform on (0, 1].
    double uniform();
    /// Exponential with the given rate; rate 0 yields +inf.
    double exponential(double rate);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return position_; }

private:
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 4> s_{};
};

/// Seed of the independent stream used for block `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// One fresh SNR sample for a link: exponential with mean 1 / rate_lambda.
double draw_link_snr(const LinkParam& link, RngStream& rng);

enum class Scheme { MDMA, TDMA, FDMA, NOMA };

/// Which NOMA stream a receiver decodes first.
enum class SicOrder {
    MeanPower,      // the stream with the larger mean received power
    Instantaneous,  // the stream with the larger received power in this slot
};

const char* scheme_name(Scheme scheme);
/// Accepts "mdma", "tdma", "fdma", "noma" in any case; throws ConfigError otherwise.
Scheme parse_scheme(std::string_view text);

/// A count of Bernoulli outcomes.
struct Proportion {
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;

    double estimate() const;
    /// Binomial standard error sqrt(p (1 - p) / n).
    double standard_error() const;
    void merge(const Proportion& other) {
        hits += other.hits;
        trials += other.trials;
    }
};

/// Index into per-step tallies: 2 * phase + (step - 1) in the order
/// pIS1s1, pIS1s2, pIIS1s1, pIIS1s2, pIIS2s1, pIIS2s2.
std::size_t step_kind(Phase phase, int step);
inline constexpr std::size_t kStepKinds = 6;

struct SlotEvent {
    std::uint64_t slot = 0;
    Scheme scheme = Scheme::MDMA;
    std::string state;
    bool success = false;
    // Combined SNR the decision was made on: the direct SNR in step 1, the
    // retained direct SNR plus every relay SNR in step 2.
    double mrc_total = 0.0;
    double retained_direct = 0.0;       // step 2 only
    std::vector<double> relay_snrs;     // step 2: one per member of the decode set
    std::uint64_t decode_set = 0;       // bit i <=> relay i decoded the step-1 broadcast
};

struct SimOptions {
    std::uint64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    // Slots per independently seeded block. Results depend on this and the
    // seed only, never on the thread count.
    std::uint64_t block_slots = std::uint64_t{1} << 20;
    unsigned threads = 0;  // 0: hardware concurrency
    std::size_t trace_cap = 0;  // per-slot events kept from the start of the run
    bool relay_cooperation = true;
    double noma_power_split = 0.5;  // share of P_T used by S1 under NOMA
    SicOrder sic_order = SicOrder::MeanPower;
    ChainOptions chain;
};

struct SimEstimate {
    Scheme scheme = Scheme::MDMA;
    std::uint64_t slots = 0;
    // Transmission attempts and their failures. MDMA and TDMA make exactly one
    // attempt per slot; FDMA and NOMA make one per active stream per slot.
    Proportion outage;
    std::array<Proportion, kStepKinds> step_outage{};
    // Step-1 broadcasts with an empty decode set, by source.
    Proportion empty_set_s1;
    Proportion empty_set_s2;
    std::uint64_t pairs = 0;  // image pairs delivered
    double bandwidth_units = 1.0;
    double power_units = 1.0;
    // MDMA and TDMA only: per-state slot counts in ProtocolLayout order.
    std::vector<std::uint64_t> occupancy_counts;
    std::vector<std::string> state_labels;
    std::vector<SlotEvent> trace;

    double overall_op() const { return outage.estimate(); }
    double overall_op_stderr() const { return outage.standard_error(); }
    /// Attempts per successful reception and its delta-method standard error.
    double slot_cost() const;
    double slot_cost_stderr() const;
    double slots_per_pair() const;
    /// 2 * pairs / (slots * B * W).
    double efficiency() const;
    double efficiency_stderr() const;
    std::vector<double> occupancy() const;
};

SimEstimate run_mdma(const NetworkTopology& topology, const SystemConfig& config, const SimOptions& options);

/// TDMA: S1 then S2 each deliver a full image with the same cooperation
/// (the MDMA engine with no shared phase). FDMA: both sources run the
/// single-source protocol at once on separate bands, B and W doubled.
/// NOMA: both sources transmit at once with powers rho P_T and (1 - rho) P_T
/// and every receiver applies successive interference cancellation.
SimEstimate run_baseline(Scheme scheme, const NetworkTopology& topology, const SystemConfig& config,
                         const SimOptions& options);

/// Dispatches to run_mdma or run_baseline.
SimEstimate simulate(Scheme scheme, const NetworkTopology& topology, const SystemConfig& config,
                     const SimOptions& options);

}  // namespace mdma
