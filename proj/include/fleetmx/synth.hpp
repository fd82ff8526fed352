#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fleetmx/ingest.hpp"
#include "fleetmx/tensor.hpp"

namespace fleetmx::synth {

/// Vehicles of one make/model, all bought in the same model year.
struct FleetGroup {
  std::string make;
  std::string model;
  int count = 0;
  int model_year = 0;
  std::string dept = "100";
  double purchase_cost = 25000.0;

  std::string key() const { return ingest::make_model_key(make, model); }
};

enum class TimeBasis { kAbsolute, kLifetime };

/// Rank-one intensity pattern: group weight × system weight × time profile ×
/// intensity, in expected jobs per vehicle-system-month.
struct Component {
  std::string name;
  std::map<std::string, double> group_weights;   // by make/model key
  std::map<std::string, double> system_weights;  // by system label
  TimeBasis basis = TimeBasis::kAbsolute;
  /// Absolute: one value per window month. Lifetime: one value per year of
  /// vehicle age (index 0 is the model year).
  std::vector<double> profile;
  double intensity = 0.0;
};

/// After every base job of a target vehicle, with probability rate, a
/// same-day run of the motif labels is inserted.
struct Motif {
  std::string make_model;
  std::vector<std::string> labels;
  double rate = 0.0;
};

/// Optional per-make/model chain that relabels a vehicle's jobs in time order.
struct MarkovChain {
  std::string make_model;
  std::vector<std::string> states;
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;
};

struct FleetSpec {
  std::uint64_t seed = 20170901;
  std::vector<FleetGroup> groups;
  std::vector<std::string> systems;
  ingest::YearMonth start{2013, 1};
  int n_months = 48;
  std::vector<Component> components;
  std::vector<Motif> motifs;
  std::vector<MarkovChain> chains;
  double background_rate = 0.0;
  /// Counts are rounded means instead of Poisson draws.
  bool noiseless = false;
  int first_unit = 10001;
};

void validate(const FleetSpec& spec);

/// JSON form of FleetSpec. Absolute profiles may instead be given as
/// "months_of_year": [5, 6, ...] or "range": ["YYYY-MM", "YYYY-MM"].
FleetSpec parse_spec(const std::string& json_text);
FleetSpec load_spec(const std::string& path);
std::string to_json(const FleetSpec& spec);

/// Three make/models, 60 vehicles, 48 months starting 2013-01, with a summer
/// mower component, a second-year tire component and a Charger motif.
FleetSpec demo_spec();

/// Window profile that is 1 in the listed calendar months and 0 elsewhere.
std::vector<double> seasonal_profile(const FleetSpec& spec, const std::vector<int>& months_of_year);

struct PlantedFactor {
  std::string name;
  TimeBasis basis = TimeBasis::kAbsolute;
  double intensity = 0.0;
  std::vector<double> vehicle;  // per vehicle, manifest order
  std::vector<double> system;   // per system, spec order
  std::vector<double> time;     // window months (absolute) or age years (lifetime)
};

struct MotifTruth {
  std::string make_model;
  std::vector<std::string> labels;
  double rate = 0.0;
  std::size_t opportunities = 0;  // base jobs of target vehicles
  std::size_t injections = 0;
  /// (unit, index of the motif's first job in that vehicle's sequence).
  std::vector<std::pair<std::string, std::size_t>> positions;
};

struct Manifest {
  std::vector<std::string> units;   // spec order
  std::vector<std::string> groups;  // make/model key per unit
  std::vector<std::string> systems;
  std::vector<std::string> months;  // "YYYY-MM"
  std::vector<PlantedFactor> components;
  /// Cell arrays in (unit, system, month) layout, month fastest.
  std::vector<double> expected;
  std::vector<std::uint64_t> base;     // sampled before relabeling and motifs
  std::vector<std::uint64_t> emitted;  // what the CSV contains
  std::vector<MotifTruth> motifs;
  std::map<std::string, std::vector<std::string>> sequences;  // unit → system labels
  std::size_t base_jobs = 0;
  std::size_t motif_jobs = 0;
  std::size_t total_jobs = 0;

  tensor::Dims dims() const { return {units.size(), systems.size(), months.size()}; }
  /// Emitted counts as a labeled tensor.
  tensor::Tensor3 emitted_tensor() const;
  std::string to_json() const;
};

struct Generated {
  std::string vehicles_csv;
  std::string maintenance_csv;
  Manifest manifest;
};

Generated generate(const FleetSpec& spec);

}  // namespace fleetmx::synth
