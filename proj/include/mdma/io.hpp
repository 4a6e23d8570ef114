#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "mdma/markov.hpp"
#include "mdma/simulator.hpp"
#include "mdma/topology.hpp"

namespace mdma {

// Configuration files are JSON:
//
//   {
//     "topology": {"s1": [20, 20], "s2": [0, 20], "d": [100, 0],
//                  "relays": [[50, 48.75], ...], "alpha": 3},
//     "system": {"power_dbm": 10, "noise_dbm": -50, "rate_r0": 1,
//                "total_bits": 10, "eta": 0.5, "granularity": 1000,
//                "bandwidth_units": 1, "power_units": 1}
//   }
//
// Omitted fields keep the default_paper_setup() value; unknown keys are
// rejected. "noise_dbm": "-inf" selects the noiseless limit.

Setup parse_setup(std::string_view json_text);
Setup load_setup_file(const std::filesystem::path& path);
std::string setup_to_json(const Setup& setup);

/// States, nonzero transitions as [from, to, p] triples, the stationary
/// vector, and the per-step outages the chain was built from.
std::string chain_to_json(const TransitionMatrix& chain, std::span<const double> stationary,
                          const StepOutageSet& outages, const ChainSolution* solution = nullptr);

std::string estimate_to_json(const SimEstimate& estimate);

/// Columns: slot, scheme, state, outcome, mrc_total, decode_set_bitmask.
void write_trace_csv(std::ostream& out, std::span<const SlotEvent> trace);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mdma
