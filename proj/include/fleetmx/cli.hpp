#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fleetmx/cp.hpp"
#include "fleetmx/ingest.hpp"
#include "fleetmx/seqmodel.hpp"
#include "fleetmx/synth.hpp"

namespace fleetmx::cli {

inline constexpr std::uint64_t kDefaultSeed = 20170901;

enum class ReportFormat { kCsv, kSvg, kBoth };

/// Every option any subcommand understands. Flags fill it first and a
/// --config file (key = value, keys are flag names) then overrides.
struct RunConfig {
  std::string subcommand;

  std::string vehicles;
  std::string maintenance;
  std::string tensor;
  std::string model;
  std::string spec;
  std::string split;
  std::string out;
  std::string report_dir;
  std::string config;
  bool demo = false;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;  // --seed overrides a fleet spec's own seed

  ingest::TensorizeSpec tensorize;
  std::string window_start;
  std::string window_end;
  std::string time_mode = "absolute";
  std::string granularity = "month";

  cp::AlsOptions als{5, 500, 1e-8, kDefaultSeed, 1};
  ReportFormat report_format = ReportFormat::kBoth;
  std::string format = "both";

  std::string target = "DODGE CHARGER";
  std::size_t min_len = 3;
  std::size_t max_len = 4;
  std::size_t top_n = 8;
  bool bonferroni = false;

  seqmodel::LstmConfig lstm;
  std::string part = "test";
  std::string prefix;  // ';'-separated system labels
  std::string unit;
  std::size_t top_k = 5;
};

/// Parses argv and runs one subcommand. Errors become a single
/// "error: <category>: <message>" line on err and a non-zero exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

struct PlantedMatch {
  std::string planted;
  std::size_t component = 0;  // 1-based CP component
  double time_mass = 0.0;     // share of |time loading| on the planted months
  double system_mass = 0.0;   // share of |system loading| on the planted systems
};

/// Best CP component for an absolute-time planted factor, by the product of
/// the two mass shares. Planted months and systems are those with non-zero
/// planted loading; the model is matched through its axis labels.
PlantedMatch match_planted(const cp::CpModel& model, const synth::Manifest& manifest, const synth::PlantedFactor& f);

}  // namespace fleetmx::cli
