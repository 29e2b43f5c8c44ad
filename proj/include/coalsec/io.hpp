#pragma once

// Config parsing and the on-disk formats: sweep and time-series CSV, JSONL
// event logs, saved network states and run manifests.

#include "coalsec/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace coalsec {

struct RunConfig
{
    ScenarioConfig scenario;
    MobilityConfig mobility;
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys,
/// wrong types and malformed JSON raise ParseError, invariant violations
/// raise ValidationError. Power keys are in dBm, nu0_db in dB.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Inverse of parse_config_text (dB units restored).
nlohmann::json config_to_json(const RunConfig& cfg);

/// printf %.12g; "-inf"/"inf"/"nan" for non-finite values.
std::string format_number(double x);

inline constexpr const char* sweep_csv_header =
    "param,value,protocol,seed_count,avg_secrecy_rate,stderr,avg_coalition_size,"
    "avg_max_coalition_size,merges_per_min,splits_per_min";

inline constexpr const char* timeseries_csv_header =
    "time_s,num_coalitions,merge_events,split_events,avg_secrecy_rate,avg_coalition_size";

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_timeseries_csv(std::ostream& os, const MobileRun& run);

/// One JSON object per line: round, time_s, kind, before, after,
/// payoffs_before, payoffs_after. Payoffs are [user, value] pairs with the
/// string "-inf" for an infeasible slot.
void write_trace_jsonl(std::ostream& os, const FormationTrace& trace);
FormationTrace read_trace_jsonl(std::istream& is);

nlohmann::json state_to_json(const NetworkState& state);
NetworkState state_from_json(const nlohmann::json& j);
nlohmann::json partition_to_json(const Partition& p);
Partition partition_from_json(const nlohmann::json& j, std::size_t num_users);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace coalsec
