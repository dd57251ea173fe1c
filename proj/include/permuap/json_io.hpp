#ifndef PERMUAP_JSON_IO_HPP_
#define PERMUAP_JSON_IO_HPP_

#include "permuap/constructive.hpp"
#include "permuap/harness.hpp"
#include "permuap/laperm.hpp"
#include "permuap/relu_net.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace permuap {

inline constexpr const char *kVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Network document; reals are written in shortest round-trip form, so reading back is bit-exact
/// (signed zeros included). Non-finite values are rejected.
std::string net_to_json(const ReluNetd &net, int indent = 1);
ReluNetd net_from_json(const std::string &text);

std::string ledger_to_json(const ConstructionLedger &ledger, int indent = 1);

/// Final loss, event count, moved totals and the multiset flag; the per-epoch series goes to CSV.
std::string report_summary_json(const TrainReport &report, int indent = 1);

/// Canonical form used for the config hash (no wall time, no output paths).
std::string sweep_config_json(const SweepConfig &cfg);

}  // namespace permuap

#endif  // PERMUAP_JSON_IO_HPP_
