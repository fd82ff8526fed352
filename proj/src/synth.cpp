#include "fleetmx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fleetmx/csv.hpp"
#include "fleetmx/error.hpp"
#include "fleetmx/rng.hpp"
#include "text_util.hpp"

namespace fleetmx::synth {

using nlohmann::ordered_json;

namespace {

std::string year_month_label(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", index / 12, index % 12 + 1);
  return buf;
}

void require_rate(double v, const std::string& what) {
  require(std::isfinite(v) && v >= 0.0, ErrorCategory::kInvalidArgument, what + " must be finite and non-negative");
}

}  // namespace

void validate(const FleetSpec& spec) {
  const auto bad = ErrorCategory::kInvalidArgument;
  require(!spec.groups.empty(), bad, "fleet spec has no vehicle groups");
  require(!spec.systems.empty(), bad, "fleet spec has no systems");
  require(spec.n_months >= 1, bad, "n_months must be >= 1");
  require(spec.start.month >= 1 && spec.start.month <= 12 && spec.start.year >= 1900 && spec.start.year <= 2100, bad,
          "window start must be a valid month");
  require(spec.first_unit >= 0, bad, "first_unit must be non-negative");
  require_rate(spec.background_rate, "background_rate");

  std::set<std::string> keys;
  for (const auto& g : spec.groups) {
    require(!g.make.empty() && !g.model.empty(), bad, "vehicle group needs make and model");
    require(g.count >= 1, bad, "group '" + g.key() + "' needs at least one vehicle");
    require(g.model_year >= 1900 && g.model_year <= 2100, bad, "group '" + g.key() + "' has a bad model year");
    require_rate(g.purchase_cost, "purchase_cost");
    require(keys.insert(g.key()).second, bad, "duplicate vehicle group '" + g.key() + "'");
  }
  std::set<std::string> systems;
  for (const auto& s : spec.systems) {
    require(!s.empty() && ingest::normalize_system(s) == s, bad,
            "system label '" + s + "' must be non-empty and in normalized (trimmed, upper-case) form");
    require(systems.insert(s).second, bad, "duplicate system '" + s + "'");
  }

  for (const auto& c : spec.components) {
    const std::string name = "component '" + c.name + "'";
    require_rate(c.intensity, name + " intensity");
    for (const auto& [k, w] : c.group_weights) {
      require(keys.count(k), bad, name + " names unknown group '" + k + "'");
      require_rate(w, name + " group weight");
    }
    for (const auto& [s, w] : c.system_weights) {
      require(systems.count(s), bad, name + " names unknown system '" + s + "'");
      require_rate(w, name + " system weight");
    }
    if (c.basis == TimeBasis::kAbsolute)
      require(c.profile.size() == static_cast<std::size_t>(spec.n_months), bad,
              name + " needs one profile value per window month");
    else
      require(!c.profile.empty() && c.profile.size() <= 64, bad, name + " lifetime profile needs 1..64 years");
    for (double v : c.profile) require_rate(v, name + " profile value");
  }

  for (const auto& m : spec.motifs) {
    require(keys.count(m.make_model), bad, "motif targets unknown group '" + m.make_model + "'");
    require(!m.labels.empty(), bad, "motif has no labels");
    for (const auto& l : m.labels) require(systems.count(l), bad, "motif label '" + l + "' is not a system");
    require(std::isfinite(m.rate) && m.rate >= 0.0 && m.rate <= 1.0, bad, "motif rate must lie in [0, 1]");
  }

  std::set<std::string> chained;
  for (const auto& ch : spec.chains) {
    require(keys.count(ch.make_model), bad, "chain targets unknown group '" + ch.make_model + "'");
    require(chained.insert(ch.make_model).second, bad, "more than one chain for '" + ch.make_model + "'");
    const std::size_t n = ch.states.size();
    require(n >= 1, bad, "chain has no states");
    for (const auto& s : ch.states) require(systems.count(s), bad, "chain state '" + s + "' is not a system");
    auto check_row = [&](const std::vector<double>& row, const std::string& what) {
      require(row.size() == n, bad, "chain " + what + " must have one entry per state");
      double sum = 0.0;
      for (double v : row) {
        require_rate(v, "chain " + what);
        sum += v;
      }
      require(std::abs(sum - 1.0) < 1e-9, bad, "chain " + what + " must sum to 1");
    };
    check_row(ch.initial, "initial distribution");
    require(ch.transition.size() == n, bad, "chain transition matrix must be square");
    for (const auto& row : ch.transition) check_row(row, "transition row");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <class T>
T field(const ordered_json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

ingest::YearMonth year_month(const ordered_json& j) {
  const auto text = j.get<std::string>();
  auto ym = ingest::parse_year_month(text);
  require(ym.has_value(), ErrorCategory::kParse, "bad year-month '" + text + "' (expected YYYY-MM)");
  return *ym;
}

}  // namespace

std::vector<double> seasonal_profile(const FleetSpec& spec, const std::vector<int>& months_of_year) {
  std::vector<double> p(static_cast<std::size_t>(spec.n_months), 0.0);
  for (int m = 0; m < spec.n_months; ++m) {
    const int calendar = (spec.start.index() + m) % 12 + 1;
    if (std::find(months_of_year.begin(), months_of_year.end(), calendar) != months_of_year.end())
      p[static_cast<std::size_t>(m)] = 1.0;
  }
  return p;
}

FleetSpec parse_spec(const std::string& json_text) {
  FleetSpec spec;
  try {
    const auto j = ordered_json::parse(json_text);
    require(j.is_object(), ErrorCategory::kParse, "fleet spec must be a JSON object");
    spec.seed = field<std::uint64_t>(j, "seed", spec.seed);
    if (j.contains("start")) spec.start = year_month(j.at("start"));
    spec.n_months = field<int>(j, "n_months", spec.n_months);
    spec.background_rate = field<double>(j, "background_rate", spec.background_rate);
    spec.noiseless = field<bool>(j, "noiseless", spec.noiseless);
    spec.first_unit = field<int>(j, "first_unit", spec.first_unit);
    spec.systems = field<std::vector<std::string>>(j, "systems", {});
    for (const auto& g : j.value("groups", ordered_json::array())) {
      FleetGroup fg;
      fg.make = g.at("make").get<std::string>();
      fg.model = g.at("model").get<std::string>();
      fg.count = g.at("count").get<int>();
      fg.model_year = g.at("model_year").get<int>();
      fg.dept = field<std::string>(g, "dept", fg.dept);
      fg.purchase_cost = field<double>(g, "purchase_cost", fg.purchase_cost);
      spec.groups.push_back(std::move(fg));
    }
    for (const auto& c : j.value("components", ordered_json::array())) {
      Component comp;
      comp.name = field<std::string>(c, "name", "");
      comp.group_weights = field<std::map<std::string, double>>(c, "groups", {});
      comp.system_weights = field<std::map<std::string, double>>(c, "systems", {});
      const auto basis = field<std::string>(c, "basis", "absolute");
      require(basis == "absolute" || basis == "lifetime", ErrorCategory::kParse,
              "component basis must be 'absolute' or 'lifetime'");
      comp.basis = basis == "absolute" ? TimeBasis::kAbsolute : TimeBasis::kLifetime;
      comp.intensity = c.at("intensity").get<double>();
      if (c.contains("profile")) {
        comp.profile = c.at("profile").get<std::vector<double>>();
      } else if (c.contains("months_of_year")) {
        require(comp.basis == TimeBasis::kAbsolute, ErrorCategory::kParse, "months_of_year needs an absolute basis");
        comp.profile = seasonal_profile(spec, c.at("months_of_year").get<std::vector<int>>());
      } else if (c.contains("range")) {
        require(comp.basis == TimeBasis::kAbsolute, ErrorCategory::kParse, "range needs an absolute basis");
        const auto& r = c.at("range");
        require(r.is_array() && r.size() == 2, ErrorCategory::kParse, "range must be [\"YYYY-MM\", \"YYYY-MM\"]");
        const int lo = year_month(r[0]).index() - spec.start.index();
        const int hi = year_month(r[1]).index() - spec.start.index();
        comp.profile.assign(static_cast<std::size_t>(std::max(spec.n_months, 0)), 0.0);
        for (int m = std::max(lo, 0); m <= std::min(hi, spec.n_months - 1); ++m)
          comp.profile[static_cast<std::size_t>(m)] = 1.0;
      } else {
        comp.profile.assign(static_cast<std::size_t>(std::max(spec.n_months, 0)), 1.0);
      }
      spec.components.push_back(std::move(comp));
    }
    for (const auto& m : j.value("motifs", ordered_json::array()))
      spec.motifs.push_back({m.at("make_model").get<std::string>(), m.at("labels").get<std::vector<std::string>>(),
                             m.at("rate").get<double>()});
    for (const auto& ch : j.value("chains", ordered_json::array()))
      spec.chains.push_back({ch.at("make_model").get<std::string>(), ch.at("states").get<std::vector<std::string>>(),
                             ch.at("initial").get<std::vector<double>>(),
                             ch.at("transition").get<std::vector<std::vector<double>>>()});
  } catch (const ordered_json::exception& e) {
    fail(ErrorCategory::kParse, std::string("fleet spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

FleetSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open fleet spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

std::string to_json(const FleetSpec& spec) {
  ordered_json j;
  j["seed"] = spec.seed;
  j["start"] = year_month_label(spec.start.index());
  j["n_months"] = spec.n_months;
  j["background_rate"] = spec.background_rate;
  j["noiseless"] = spec.noiseless;
  j["first_unit"] = spec.first_unit;
  j["systems"] = spec.systems;
  j["groups"] = ordered_json::array();
  for (const auto& g : spec.groups)
    j["groups"].push_back({{"make", g.make},
                           {"model", g.model},
                           {"count", g.count},
                           {"model_year", g.model_year},
                           {"dept", g.dept},
                           {"purchase_cost", g.purchase_cost}});
  j["components"] = ordered_json::array();
  for (const auto& c : spec.components)
    j["components"].push_back({{"name", c.name},
                               {"groups", c.group_weights},
                               {"systems", c.system_weights},
                               {"basis", c.basis == TimeBasis::kAbsolute ? "absolute" : "lifetime"},
                               {"profile", c.profile},
                               {"intensity", c.intensity}});
  j["motifs"] = ordered_json::array();
  for (const auto& m : spec.motifs)
    j["motifs"].push_back({{"make_model", m.make_model}, {"labels", m.labels}, {"rate", m.rate}});
  j["chains"] = ordered_json::array();
  for (const auto& ch : spec.chains)
    j["chains"].push_back({{"make_model", ch.make_model},
                           {"states", ch.states},
                           {"initial", ch.initial},
                           {"transition", ch.transition}});
  return j.dump(2) + "\n";
}

FleetSpec demo_spec() {
  FleetSpec s;
  s.seed = 20170901;
  s.start = {2013, 1};
  s.n_months = 48;
  s.background_rate = 0.02;
  s.groups = {
      {"DODGE", "CHARGER", 30, 2013, "370", 27500.0},
      {"HUSTLER", "X-ONE", 15, 2014, "190", 11800.0},
      {"SMEAL", "SST PUMPER", 15, 2015, "350", 512000.0},
  };
  s.systems = {"PM SERVICE ALL LEVELS", "TIRES/TUBES/LINERS & VALVES", "MOWER BLADES & DECK", "BRAKES",
               "EXHAUST",              "ENGINE",                      "COOLING SYSTEM",      "ELECTRICAL",
               "LIGHTING",             "BODY",                        "HVAC",                "SUSPENSION"};
  const std::string charger = "DODGE CHARGER", mower = "HUSTLER X-ONE", pumper = "SMEAL SST PUMPER";
  s.components.push_back({"mower-summer",
                          {{mower, 1.0}},
                          {{"MOWER BLADES & DECK", 1.0}, {"TIRES/TUBES/LINERS & VALVES", 0.6}},
                          TimeBasis::kAbsolute,
                          seasonal_profile(s, {5, 6, 7, 8, 9}),
                          1.5});
  s.components.push_back({"second-year-tires",
                          {{charger, 1.0}, {mower, 0.5}, {pumper, 0.8}},
                          {{"TIRES/TUBES/LINERS & VALVES", 1.0}},
                          TimeBasis::kLifetime,
                          {0.0, 1.0},
                          0.15});
  s.components.push_back({"charger-service",
                          {{charger, 1.0}},
                          {{"PM SERVICE ALL LEVELS", 1.0}, {"BRAKES", 0.4}},
                          TimeBasis::kAbsolute,
                          std::vector<double>(48, 1.0),
                          0.25});
  std::vector<double> burst(48, 0.0);
  for (int m = 30; m < 36; ++m) burst[static_cast<std::size_t>(m)] = 1.0;  // 2015-07 .. 2015-12
  s.components.push_back({"pumper-burst",
                          {{pumper, 1.0}},
                          {{"ENGINE", 1.0}, {"EXHAUST", 0.7}, {"COOLING SYSTEM", 0.3}},
                          TimeBasis::kAbsolute,
                          burst,
                          1.5});
  const std::vector<std::string> motif = {"ELECTRICAL", "LIGHTING", "BODY"};
  s.motifs = {{charger, motif, 0.3}, {mower, motif, 0.01}, {pumper, motif, 0.01}};
  return s;
}

// ---------------------------------------------------------------------------
// Generation

tensor::Tensor3 Manifest::emitted_tensor() const {
  std::vector<double> data(emitted.begin(), emitted.end());
  return tensor::Tensor3(dims(), std::move(data), {units, systems, months});
}

std::string Manifest::to_json() const {
  ordered_json j;
  j["format"] = "fleetmx-synth-manifest";
  j["version"] = 1;
  j["units"] = units;
  j["groups"] = groups;
  j["systems"] = systems;
  j["months"] = months;
  j["totals"] = {{"base_jobs", base_jobs}, {"motif_jobs", motif_jobs}, {"total_jobs", total_jobs}};
  j["components"] = ordered_json::array();
  for (const auto& c : components)
    j["components"].push_back({{"name", c.name},
                               {"basis", c.basis == TimeBasis::kAbsolute ? "absolute" : "lifetime"},
                               {"intensity", c.intensity},
                               {"vehicle", c.vehicle},
                               {"system", c.system},
                               {"time", c.time}});
  j["motifs"] = ordered_json::array();
  for (const auto& m : motifs) {
    ordered_json pos = ordered_json::array();
    for (const auto& [unit, idx] : m.positions) pos.push_back({unit, idx});
    j["motifs"].push_back({{"make_model", m.make_model},
                           {"labels", m.labels},
                           {"rate", m.rate},
                           {"opportunities", m.opportunities},
                           {"injections", m.injections},
                           {"positions", pos}});
  }
  j["cells"] = {{"layout", "unit,system,month (month fastest)"},
                {"expected", expected},
                {"base", base},
                {"emitted", emitted}};
  j["sequences"] = sequences;
  return j.dump(1) + "\n";
}

namespace {

struct Job {
  ingest::Date date;
  int system = 0;
  bool motif = false;
};

std::string money(double v) {
  const auto cents = static_cast<long long>(std::llround(v * 100.0));
  std::string whole = std::to_string(cents / 100);
  for (int pos = static_cast<int>(whole.size()) - 3; pos > 0; pos -= 3) whole.insert(static_cast<std::size_t>(pos), ",");
  char frac[8];
  std::snprintf(frac, sizeof(frac), ".%02lld", cents % 100);
  return "$" + whole + frac;
}

std::size_t sample_index(Rng& rng, const std::vector<double>& probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    acc += probs[n];
    if (u < acc) return n;
  }
  // Rounding slack: fall back to the last state with positive mass.
  for (std::size_t n = probs.size(); n-- > 0;)
    if (probs[n] > 0.0) return n;
  return 0;
}

}  // namespace

Generated generate(const FleetSpec& spec) {
  validate(spec);
  Rng count_rng(Rng::derive_seed(spec.seed, 11));
  Rng day_rng(Rng::derive_seed(spec.seed, 12));
  Rng chain_rng(Rng::derive_seed(spec.seed, 13));
  Rng motif_rng(Rng::derive_seed(spec.seed, 14));
  Rng cosmetic_rng(Rng::derive_seed(spec.seed, 15));

  Manifest man;
  man.systems = spec.systems;
  std::vector<const FleetGroup*> unit_group;
  int unit = spec.first_unit;
  for (const auto& g : spec.groups)
    for (int n = 0; n < g.count; ++n) {
      man.units.push_back(std::to_string(unit++));
      man.groups.push_back(g.key());
      unit_group.push_back(&g);
    }
  for (int m = 0; m < spec.n_months; ++m) man.months.push_back(year_month_label(spec.start.index() + m));
  std::unordered_map<std::string, int> sys_index;
  for (std::size_t s = 0; s < spec.systems.size(); ++s) sys_index[spec.systems[s]] = static_cast<int>(s);

  const std::size_t I = man.units.size(), J = spec.systems.size(), K = static_cast<std::size_t>(spec.n_months);
  auto cell = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * J + j) * K + k; };
  auto month_year = [&](std::size_t k) { return (spec.start.index() + static_cast<int>(k)) / 12; };

  // Planted factors and expected counts.
  for (const auto& c : spec.components) {
    PlantedFactor f;
    f.name = c.name;
    f.basis = c.basis;
    f.intensity = c.intensity;
    for (std::size_t i = 0; i < I; ++i) {
      auto it = c.group_weights.find(man.groups[i]);
      f.vehicle.push_back(it == c.group_weights.end() ? 0.0 : it->second);
    }
    for (const auto& s : spec.systems) {
      auto it = c.system_weights.find(s);
      f.system.push_back(it == c.system_weights.end() ? 0.0 : it->second);
    }
    f.time = c.profile;
    man.components.push_back(std::move(f));
  }
  man.expected.assign(I * J * K, 0.0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      const int age = month_year(k) - unit_group[i]->model_year;
      if (age < 0) continue;  // not yet bought
      for (std::size_t j = 0; j < J; ++j) {
        double mu = spec.background_rate;
        for (const auto& f : man.components) {
          double t = 0.0;
          if (f.basis == TimeBasis::kAbsolute) t = f.time[k];
          else if (static_cast<std::size_t>(age) < f.time.size()) t = f.time[static_cast<std::size_t>(age)];
          mu += f.intensity * f.vehicle[i] * f.system[j] * t;
        }
        man.expected[cell(i, j, k)] = mu;
      }
    }
  man.base.assign(I * J * K, 0);
  for (std::size_t n = 0; n < man.expected.size(); ++n)
    man.base[n] = spec.noiseless ? static_cast<std::uint64_t>(std::llround(man.expected[n]))
                                 : count_rng.poisson(man.expected[n]);

  // Per-vehicle timelines.
  std::vector<std::vector<Job>> timelines(I);
  for (std::size_t i = 0; i < I; ++i) {
    auto& tl = timelines[i];
    for (std::size_t k = 0; k < K; ++k) {
      const int ym = spec.start.index() + static_cast<int>(k);
      const int year = ym / 12, month = ym % 12 + 1;
      const int dim = ingest::days_in_month(year, month);
      for (std::size_t j = 0; j < J; ++j)
        for (std::uint64_t n = 0; n < man.base[cell(i, j, k)]; ++n) {
          const int day = 1 + static_cast<int>(day_rng.uniform_index(static_cast<std::uint64_t>(dim)));
          tl.push_back({{year, month, day, 0}, static_cast<int>(j), false});
        }
    }
    std::stable_sort(tl.begin(), tl.end(), [](const Job& a, const Job& b) { return a.date < b.date; });
    man.base_jobs += tl.size();

    for (const auto& ch : spec.chains) {
      if (ch.make_model != man.groups[i]) continue;
      std::size_t state = 0;
      for (std::size_t n = 0; n < tl.size(); ++n) {
        state = sample_index(chain_rng, n == 0 ? ch.initial : ch.transition[state]);
        tl[n].system = sys_index.at(ch.states[state]);
      }
    }
  }

  for (const auto& m : spec.motifs) {
    MotifTruth truth{m.make_model, m.labels, m.rate, 0, 0, {}};
    man.motifs.push_back(std::move(truth));
  }
  for (std::size_t i = 0; i < I; ++i) {
    std::vector<std::size_t> active;
    for (std::size_t n = 0; n < spec.motifs.size(); ++n)
      if (spec.motifs[n].make_model == man.groups[i]) active.push_back(n);
    if (active.empty()) continue;
    std::vector<Job> out;
    for (const Job& job : timelines[i]) {
      out.push_back(job);
      for (std::size_t n : active) {
        auto& truth = man.motifs[n];
        ++truth.opportunities;
        if (!motif_rng.bernoulli(spec.motifs[n].rate)) continue;
        ++truth.injections;
        truth.positions.emplace_back(man.units[i], out.size());
        for (const auto& label : spec.motifs[n].labels) out.push_back({job.date, sys_index.at(label), true});
        man.motif_jobs += spec.motifs[n].labels.size();
      }
    }
    timelines[i] = std::move(out);
  }

  man.emitted.assign(I * J * K, 0);
  for (std::size_t i = 0; i < I; ++i) {
    auto& seq = man.sequences[man.units[i]];
    for (const Job& job : timelines[i]) {
      const auto k = static_cast<std::size_t>(job.date.year * 12 + job.date.month - 1 - spec.start.index());
      ++man.emitted[cell(i, static_cast<std::size_t>(job.system), k)];
      seq.push_back(spec.systems[static_cast<std::size_t>(job.system)]);
    }
    man.total_jobs += timelines[i].size();
  }

  // CSV text. Cosmetic columns use their own stream so they never shift the
  // planted structure.
  Generated gen;
  std::ostringstream maint;
  csv::write_row(maint, ingest::maintenance_header());
  std::ostringstream veh;
  csv::write_row(veh, ingest::vehicle_header());
  const std::string last_day = [&] {
    const int ym = spec.start.index() + spec.n_months - 1;
    return ingest::format_date({ym / 12, ym % 12 + 1, ingest::days_in_month(ym / 12, ym % 12 + 1), 0});
  }();
  long long job_id = 1000001;
  for (std::size_t i = 0; i < I; ++i) {
    double meter = 0.0, maintenance_cost = 0.0;
    for (const Job& job : timelines[i]) {
      const std::string date = ingest::format_date(job.date);
      const std::string& system = spec.systems[static_cast<std::size_t>(job.system)];
      meter += 50.0 + std::floor(cosmetic_rng.uniform(0.0, 900.0));
      const double hours = 0.5 + std::floor(cosmetic_rng.uniform(0.0, 12.0)) / 2.0;
      const double labor = hours * 62.5;
      const double parts = std::floor(cosmetic_rng.uniform(0.0, 40000.0)) / 100.0;
      maintenance_cost += labor + parts;
      char sys_code[16];
      std::snprintf(sys_code, sizeof(sys_code), "%02d", job.system + 1);
      const std::string id = std::to_string(job_id++);
      const bool pm = system.rfind("PM ", 0) == 0;
      csv::write_row(maint, {id,
                             std::to_string(job.date.year),
                             man.units[i],
                             "WO" + id,
                             date,
                             date,
                             "CENTRAL GARAGE",
                             date,
                             pm ? "PM" : "RP",
                             pm ? "PREVENTIVE MAINTENANCE" : "REPAIR",
                             date,
                             date,
                             std::string(sys_code) + "-" + (job.motif ? "M" : "B"),
                             system,
                             detail::fixed(hours, 1),
                             money(labor),
                             money(0.0),
                             money(parts),
                             detail::fixed(meter, 0),
                             "DONE",
                             pm ? "01" : "02",
                             pm ? "SCHEDULED" : "UNSCHEDULED",
                             sys_code,
                             system,
                             "CENTRAL GARAGE"});
    }
    const FleetGroup& g = *unit_group[i];
    csv::write_row(veh, {man.units[i], g.dept, "DEPT " + g.dept, g.make, g.model, std::to_string(g.model_year),
                         detail::fixed(meter, 0), last_day, money(g.purchase_cost), "A", "ACTIVE",
                         money(maintenance_cost), money(0.0), "0"});
  }
  gen.vehicles_csv = veh.str();
  gen.maintenance_csv = maint.str();
  gen.manifest = std::move(man);
  return gen;
}

}  // namespace fleetmx::synth
