#include "fleetmx/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fleetmx/csv.hpp"
#include "fleetmx/error.hpp"
#include "fleetmx/seqmine.hpp"
#include "text_util.hpp"

namespace fleetmx::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  require(static_cast<bool>(out), ErrorCategory::kIo, "failed writing '" + path.string() + "'");
}

// Malformed invocations: missing flags, unknown config keys. Exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void need(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

ingest::YearMonth year_month_flag(const std::string& text, const std::string& flag) {
  auto ym = ingest::parse_year_month(text);
  require(ym.has_value(), ErrorCategory::kInvalidArgument, flag + " expects YYYY-MM, got '" + text + "'");
  return *ym;
}

// Turns the string-valued flags into enums and checks every numeric option
// against the owning module's rules.
void finalize(RunConfig& c) {
  if (c.time_mode == "absolute") c.tensorize.time_mode = ingest::TimeMode::kAbsolute;
  else if (c.time_mode == "lifetime") c.tensorize.time_mode = ingest::TimeMode::kLifetime;
  else fail(ErrorCategory::kInvalidArgument, "--time-mode must be absolute or lifetime");
  if (c.granularity == "month") c.tensorize.granularity = ingest::Granularity::kMonth;
  else if (c.granularity == "year") c.tensorize.granularity = ingest::Granularity::kYear;
  else fail(ErrorCategory::kInvalidArgument, "--granularity must be month or year");
  if (!c.window_start.empty()) c.tensorize.window_start = year_month_flag(c.window_start, "--window-start");
  if (!c.window_end.empty()) c.tensorize.window_end = year_month_flag(c.window_end, "--window-end");
  if (c.format == "csv") c.report_format = ReportFormat::kCsv;
  else if (c.format == "svg") c.report_format = ReportFormat::kSvg;
  else if (c.format == "both") c.report_format = ReportFormat::kBoth;
  else fail(ErrorCategory::kInvalidArgument, "--format must be csv, svg or both");
  c.als.seed = c.seed;
  c.lstm.seed = c.seed;
  ingest::validate(c.tensorize);
  cp::validate(c.als);
  seqmodel::validate(c.lstm);
  require(c.min_len >= 1 && c.max_len >= c.min_len, ErrorCategory::kInvalidArgument,
          "--min-len must be >= 1 and <= --max-len");
  require(c.top_n >= 1, ErrorCategory::kInvalidArgument, "--top-n must be >= 1");
  require(c.top_k >= 1, ErrorCategory::kInvalidArgument, "--top-k must be >= 1");
}

struct Inputs {
  std::vector<ingest::VehicleRecord> vehicles;
  ingest::MaintenanceTable maintenance;
};

Inputs load_inputs(const RunConfig& c) {
  need(c.vehicles, "--vehicles");
  need(c.maintenance, "--maintenance");
  return {ingest::parse_vehicles(c.vehicles), ingest::parse_maintenance(c.maintenance)};
}

ingest::TensorBuild tensorize(const Inputs& in, const ingest::TensorizeSpec& spec) {
  auto build = ingest::build_tensor(in.vehicles, in.maintenance.records, spec);
  for (const auto& r : in.maintenance.rejects) ++build.discards.parse_rejects[r.reason];
  return build;
}

std::string component_stem(std::size_t component) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "component_%02zu", component);
  return buf;
}

void write_reports(const cp::CpModel& model, const fs::path& dir, ReportFormat format) {
  fs::create_directories(dir);
  std::vector<cp::FactorReport> all;
  for (std::size_t r = 1; r <= model.rank(); ++r) {
    all.push_back(cp::factor_report(model, r));
    if (format != ReportFormat::kSvg) {
      std::ostringstream os;
      cp::write_report_csv(os, {all.back()});
      write_text(dir / (component_stem(r) + ".csv"), os.str());
    }
    if (format != ReportFormat::kCsv) {
      std::ostringstream os;
      cp::write_report_svg(os, all.back());
      write_text(dir / (component_stem(r) + ".svg"), os.str());
    }
  }
  std::ostringstream os;
  cp::write_report_csv(os, all);
  write_text(dir / "factors.csv", os.str());
}

std::string split_json(const seqmodel::Split& split, const seqmine::SequenceSet& set, std::uint64_t seed) {
  auto units = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (auto n : idx) out.push_back(set.sequences[n].unit_no);
    return out;
  };
  ordered_json j;
  j["seed"] = seed;
  j["train"] = units(split.train);
  j["valid"] = units(split.valid);
  j["test"] = units(split.test);
  return j.dump(2) + "\n";
}

std::vector<seqmodel::TokenSeq> select(const seqmine::SequenceSet& set, const std::vector<std::size_t>& idx) {
  std::vector<seqmodel::TokenSeq> out;
  for (auto n : idx) out.push_back(set.decode(set.sequences[n].events));
  return out;
}

std::vector<std::string> split_prefix(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ';')) {
    const auto t = ingest::normalize_system(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string fmt(double v, int decimals = 4) { return detail::fixed(v, decimals); }

// ---------------------------------------------------------------------------
// Subcommands

int cmd_synth(const RunConfig& c, std::ostream& out) {
  need(c.out, "--out");
  require(c.demo != !c.spec.empty(), ErrorCategory::kInvalidArgument, "give exactly one of --demo or --spec");
  synth::FleetSpec spec = c.demo ? synth::demo_spec() : synth::load_spec(c.spec);
  if (c.seed_given) spec.seed = c.seed;
  const auto gen = synth::generate(spec);
  const fs::path dir(c.out);
  write_text(dir / "spec.json", synth::to_json(spec));
  write_text(dir / "vehicles.csv", gen.vehicles_csv);
  write_text(dir / "maintenance.csv", gen.maintenance_csv);
  write_text(dir / "manifest.json", gen.manifest.to_json());
  out << "synth: " << gen.manifest.units.size() << " vehicles, " << gen.manifest.total_jobs << " jobs ("
      << gen.manifest.motif_jobs << " from motifs) -> " << dir.string() << "\n";
  return 0;
}

int cmd_tensorize(const RunConfig& c, std::ostream& out) {
  need(c.out, "--out");
  const auto in = load_inputs(c);
  const auto build = tensorize(in, c.tensorize);
  tensor::save_tensor(c.out, build.tensor);
  const auto dims = build.tensor.dims();
  out << "tensor: " << dims.i << " x " << dims.j << " x " << dims.k << " -> " << c.out << "\n";
  out << build.discards.to_json();
  return 0;
}

int cmd_parafac(const RunConfig& c, std::ostream& out) {
  need(c.tensor, "--tensor");
  need(c.out, "--out");
  const auto t = tensor::load_tensor(c.tensor);
  const auto model = cp::cp_als(t, c.als);
  cp::save_model(c.out, model);
  out << "parafac: rank " << model.rank() << ", fit " << fmt(model.fit, 6) << ", " << model.iterations
      << " iterations, " << (model.converged ? "converged" : "not converged") << " -> " << c.out << "\n";
  for (const auto& w : model.warnings) out << "warning: " << w << "\n";
  if (!c.report_dir.empty()) {
    write_reports(model, c.report_dir, c.report_format);
    out << "report: " << model.rank() << " components -> " << c.report_dir << "\n";
  }
  return 0;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  need(c.model, "--model");
  need(c.out, "--out");
  const auto model = cp::load_model(c.model);
  write_reports(model, c.out, c.report_format);
  out << "report: " << model.rank() << " components -> " << c.out << "\n";
  return 0;
}

int cmd_seqmine(const RunConfig& c, std::ostream& out) {
  const auto in = load_inputs(c);
  const auto set = seqmine::extract_sequences(in.maintenance.records, in.vehicles);
  const auto rows =
      seqmine::differential(set.sequences, ingest::normalize_system(c.target), {c.min_len, c.max_len, c.top_n});
  std::ostringstream table;
  seqmine::write_table_csv(table, rows, set.labels, c.bonferroni);
  if (c.out.empty()) {
    out << table.str();
  } else {
    write_text(c.out, table.str());
    out << "seqmine: " << rows.size() << " patterns for " << c.target << " -> " << c.out << "\n";
  }
  return 0;
}

struct TrainOutcome {
  seqmodel::SeqModel model;
  seqmodel::Split split;
  double valid_ppl = 0.0;
  double test_ppl = 0.0;
  double unigram_test_ppl = 0.0;
};

TrainOutcome train_on(const seqmine::SequenceSet& set, const seqmodel::LstmConfig& lstm) {
  TrainOutcome t;
  t.split = seqmodel::split_by_vehicle(set.sequences.size(), lstm.seed);
  const auto train = select(set, t.split.train);
  const auto valid = select(set, t.split.valid);
  const auto test = select(set, t.split.test);
  t.model = seqmodel::train(train, valid, lstm);
  t.valid_ppl = seqmodel::perplexity(t.model, valid);
  t.test_ppl = seqmodel::perplexity(t.model, test);
  t.unigram_test_ppl = seqmodel::perplexity(seqmodel::unigram_baseline(train), test);
  return t;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  need(c.out, "--out");
  const auto in = load_inputs(c);
  const auto set = seqmine::extract_sequences(in.maintenance.records, in.vehicles);
  const auto t = train_on(set, c.lstm);
  seqmodel::save_model(c.out, t.model);
  const std::string split_path = c.split.empty() ? c.out + ".split.json" : c.split;
  write_text(split_path, split_json(t.split, set, c.lstm.seed));
  for (std::size_t e = 0; e < t.model.valid_history.size(); ++e)
    out << "epoch " << e + 1 << ": lr " << fmt(seqmodel::learning_rate(c.lstm, static_cast<int>(e) + 1))
        << ", train ppl " << fmt(t.model.train_history[e]) << ", valid ppl " << fmt(t.model.valid_history[e]) << "\n";
  out << "best epoch " << t.model.best_epoch << "; valid ppl " << fmt(t.valid_ppl) << ", test ppl " << fmt(t.test_ppl)
      << ", unigram test ppl " << fmt(t.unigram_test_ppl) << "\n";
  out << "model -> " << c.out << ", split -> " << split_path << "\n";
  return 0;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  need(c.model, "--model");
  const auto model = seqmodel::load_model(c.model);
  const auto in = load_inputs(c);
  const auto set = seqmine::extract_sequences(in.maintenance.records, in.vehicles);
  if (c.split.empty()) {
    std::vector<std::size_t> all(set.sequences.size());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
    out << "perplexity (all " << all.size() << " sequences): " << fmt(seqmodel::perplexity(model, select(set, all)))
        << "\n";
    return 0;
  }
  const auto j = [&] {
    try {
      return ordered_json::parse(read_text(c.split));
    } catch (const ordered_json::exception& e) {
      fail(ErrorCategory::kParse, "split file: " + std::string(e.what()));
    }
  }();
  require(c.part == "train" || c.part == "valid" || c.part == "test", ErrorCategory::kInvalidArgument,
          "--part must be train, valid or test");
  auto pick = [&](const std::string& part) {
    require(j.contains(part), ErrorCategory::kParse, "split file lacks '" + part + "'");
    const auto units = j.at(part).get<std::vector<std::string>>();
    const std::set<std::string> wanted(units.begin(), units.end());
    std::vector<std::size_t> idx;
    for (std::size_t n = 0; n < set.sequences.size(); ++n)
      if (wanted.count(set.sequences[n].unit_no)) idx.push_back(n);
    require(idx.size() == wanted.size(), ErrorCategory::kData, "split file names units without job history");
    return select(set, idx);
  };
  const auto seqs = pick(c.part);
  const auto baseline = seqmodel::unigram_baseline(pick("train"));
  out << c.part << " perplexity: " << fmt(seqmodel::perplexity(model, seqs)) << " (" << seqs.size()
      << " sequences); unigram baseline: " << fmt(seqmodel::perplexity(baseline, seqs)) << "\n";
  return 0;
}

int cmd_predict(const RunConfig& c, std::ostream& out) {
  need(c.model, "--model");
  const auto model = seqmodel::load_model(c.model);
  seqmodel::TokenSeq prefix;
  if (!c.unit.empty()) {
    const auto in = load_inputs(c);
    const auto set = seqmine::extract_sequences(in.maintenance.records, in.vehicles);
    auto it = std::find_if(set.sequences.begin(), set.sequences.end(),
                           [&](const seqmine::EventSequence& s) { return s.unit_no == c.unit; });
    require(it != set.sequences.end(), ErrorCategory::kData, "unit '" + c.unit + "' has no job history");
    prefix = set.decode(it->events);
  } else {
    prefix = split_prefix(c.prefix);
  }
  std::vector<std::string> row = {"rank", "label", "probability"};
  csv::write_row(out, row);
  std::size_t rank = 1;
  for (const auto& p : seqmodel::predict_next(model, prefix, c.top_k))
    csv::write_row(out, {std::to_string(rank++), p.label, fmt(p.probability, 6)});
  return 0;
}

int cmd_pipeline(const RunConfig& c, std::ostream& out) {
  need(c.out, "--out");
  require(c.demo != !c.spec.empty(), ErrorCategory::kInvalidArgument, "give exactly one of --demo or --spec");
  synth::FleetSpec spec = c.demo ? synth::demo_spec() : synth::load_spec(c.spec);
  if (c.seed_given) spec.seed = c.seed;
  const fs::path dir(c.out);
  const auto gen = synth::generate(spec);
  write_text(dir / "spec.json", synth::to_json(spec));
  write_text(dir / "vehicles.csv", gen.vehicles_csv);
  write_text(dir / "maintenance.csv", gen.maintenance_csv);
  write_text(dir / "manifest.json", gen.manifest.to_json());
  const auto& man = gen.manifest;

  RunConfig files = c;
  files.vehicles = (dir / "vehicles.csv").string();
  files.maintenance = (dir / "maintenance.csv").string();
  const auto in = load_inputs(files);

  ingest::TensorizeSpec ts;
  ts.window_start = spec.start;
  ts.window_end = ingest::YearMonth{(spec.start.index() + spec.n_months - 1) / 12,
                                    (spec.start.index() + spec.n_months - 1) % 12 + 1};
  ts.purchase_year_floor = std::min(ts.purchase_year_floor, spec.start.year);
  for (const auto& g : spec.groups) ts.purchase_year_floor = std::min(ts.purchase_year_floor, g.model_year);
  const auto build = tensorize(in, ts);
  tensor::save_tensor((dir / "tensor.txt").string(), build.tensor);
  write_text(dir / "discards.json", build.discards.to_json());

  const auto model = cp::cp_als(build.tensor, c.als);
  cp::save_model((dir / "cp_model.txt").string(), model);
  write_reports(model, dir / "report", c.report_format);

  const auto set = seqmine::extract_sequences(in.maintenance.records, in.vehicles);
  const std::string target = ingest::normalize_system(c.target);
  const auto rows = seqmine::differential(set.sequences, target, {c.min_len, c.max_len, c.top_n});
  {
    std::ostringstream os;
    seqmine::write_table_csv(os, rows, set.labels, c.bonferroni);
    write_text(dir / "seqmine.csv", os.str());
  }

  const auto t = train_on(set, c.lstm);
  seqmodel::save_model((dir / "lstm.bin").string(), t.model);
  write_text(dir / "split.json", split_json(t.split, set, c.lstm.seed));

  std::ostringstream s;
  bool all_pass = true;
  auto check = [&](bool ok, const std::string& line) {
    all_pass = all_pass && ok;
    s << (ok ? "PASS " : "FAIL ") << line << "\n";
  };
  double tensor_sum = 0.0;
  for (double v : build.tensor.data()) tensor_sum += v;
  s << "fleetmx pipeline summary (seed " << spec.seed << ")\n";
  check(in.maintenance.rejects.empty() && build.discards.total_discarded() == 0,
        "ingest: " + std::to_string(in.maintenance.records.size()) + " jobs parsed, " +
            std::to_string(in.maintenance.rejects.size()) + " rejected, " +
            std::to_string(build.discards.total_discarded()) + " discarded");
  check(tensor_sum == static_cast<double>(man.total_jobs),
        "tensor: " + std::to_string(build.tensor.dims().i) + "x" + std::to_string(build.tensor.dims().j) + "x" +
            std::to_string(build.tensor.dims().k) + ", sum " + fmt(tensor_sum, 0) + " vs manifest " +
            std::to_string(man.total_jobs));
  s << "parafac: rank " << model.rank() << ", fit " << fmt(model.fit) << ", " << model.iterations << " iterations\n";
  // Only the absolute-time component that plants the most jobs is held to
  // the recovery thresholds; weaker ones are listed for information.
  const synth::PlantedFactor* dominant = nullptr;
  double dominant_jobs = 0.0;
  for (const auto& f : man.components) {
    if (f.basis != synth::TimeBasis::kAbsolute) continue;
    double sv = 0.0, ss = 0.0, st = 0.0;
    for (double v : f.vehicle) sv += v;
    for (double v : f.system) ss += v;
    for (double v : f.time) st += v;
    if (f.intensity * sv * ss * st > dominant_jobs) {
      dominant_jobs = f.intensity * sv * ss * st;
      dominant = &f;
    }
  }
  for (const auto& f : man.components) {
    if (f.basis != synth::TimeBasis::kAbsolute) continue;
    const auto m = match_planted(model, man, f);
    const std::string line = "planted '" + f.name + "' -> component " + std::to_string(m.component) +
                             ": time mass " + fmt(m.time_mass, 3) + ", system mass " + fmt(m.system_mass, 3);
    if (&f == dominant) check(m.time_mass >= 0.7 && m.system_mass >= 0.6, line);
    else s << "info " << line << "\n";
  }
  for (const auto& m : man.motifs) {
    if (m.make_model != target) continue;
    std::vector<int> motif;
    for (const auto& l : m.labels) {
      auto it = std::lower_bound(set.labels.begin(), set.labels.end(), l);
      motif.push_back(it != set.labels.end() && *it == l ? static_cast<int>(it - set.labels.begin()) : -1);
    }
    const bool first = !rows.empty() && rows.front().pattern == motif;
    check(first && rows.front().p < 1e-4 && rows.front().i_ratio > 10.0,
          "motif " + seqmine::format_pattern(motif, set.labels) + " for " + target + ": " +
              (rows.empty() ? std::string("no patterns")
                            : "top pattern " + seqmine::format_pattern(rows.front().pattern, set.labels) +
                                  ", i-ratio " + seqmine::format_i_ratio(rows.front().i_ratio) + ", p " +
                                  seqmine::format_p(rows.front().p)));
  }
  check(t.test_ppl < t.unigram_test_ppl, "lstm: best epoch " + std::to_string(t.model.best_epoch) + ", valid ppl " +
                                             fmt(t.valid_ppl) + ", test ppl " + fmt(t.test_ppl) +
                                             ", unigram test ppl " + fmt(t.unigram_test_ppl));
  s << (all_pass ? "overall: PASS" : "overall: FAIL") << "\n";
  write_text(dir / "summary.txt", s.str());
  out << s.str();
  return all_pass ? 0 : 1;
}

// Applies "key = value" lines on top of the parsed flags of one subcommand.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    require(eq != std::string_view::npos, ErrorCategory::kParse, where + ": expected key = value");
    std::string key(detail::trim(body.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value(detail::trim(body.substr(eq + 1)));
    if (key == "config") throw UsageError(where + ": config files cannot include others");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(where + ": '" + key + "' is not an option of " + sub->get_name());
    try {
      opt->clear();
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
}

}  // namespace

PlantedMatch match_planted(const cp::CpModel& model, const synth::Manifest& manifest, const synth::PlantedFactor& f) {
  std::set<std::string> months, systems;
  for (std::size_t k = 0; k < f.time.size() && k < manifest.months.size(); ++k)
    if (f.time[k] > 0.0) months.insert(manifest.months[k]);
  for (std::size_t j = 0; j < f.system.size(); ++j)
    if (f.system[j] > 0.0) systems.insert(manifest.systems[j]);
  PlantedMatch best;
  best.planted = f.name;
  double best_score = -1.0;
  auto share = [](const tensor::Matrix& m, std::size_t r, const std::vector<std::string>& labels,
                  const std::set<std::string>& wanted) {
    double in = 0.0, total = 0.0;
    for (std::size_t n = 0; n < m.rows(); ++n) {
      const double v = std::abs(m(n, r));
      total += v;
      if (wanted.count(labels[n])) in += v;
    }
    return total > 0.0 ? in / total : 0.0;
  };
  for (std::size_t r = 0; r < model.rank(); ++r) {
    const double tm = share(model.c, r, model.labels[2], months);
    const double sm = share(model.b, r, model.labels[1], systems);
    if (tm * sm > best_score) {
      best_score = tm * sm;
      best.component = r + 1;
      best.time_mass = tm;
      best.system_mass = sm;
    }
  }
  return best;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"fleetmx: fleet maintenance tensors, sequence mining and next-job prediction", "fleetmx"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("--config", cfg.config, "key = value file whose entries override flags")->check(CLI::ExistingFile);
    s->add_option("--seed", cfg.seed, "Seed for every randomized step (default 20170901)")
        ->each([&](const std::string&) { cfg.seed_given = true; });
  };
  auto inputs = [&](CLI::App* s) {
    s->add_option("--vehicles", cfg.vehicles, "Vehicles CSV");
    s->add_option("--maintenance", cfg.maintenance, "Maintenance CSV");
  };
  auto tensor_opts = [&](CLI::App* s) {
    s->add_option("--time-mode", cfg.time_mode, "absolute or lifetime");
    s->add_option("--granularity", cfg.granularity, "month or year (lifetime needs year)");
    s->add_option("--window-start", cfg.window_start, "First month, YYYY-MM (default 2010-01)");
    s->add_option("--window-end", cfg.window_end, "Last month, YYYY-MM (default: latest job)");
    s->add_option("--horizon", cfg.tensorize.horizon_years, "Lifetime years kept (default 8)");
    s->add_option("--purchase-floor", cfg.tensorize.purchase_year_floor,
                  "Vehicles bought before this year are dropped (default 2010)");
  };
  auto als_opts = [&](CLI::App* s) {
    s->add_option("--rank", cfg.als.rank, "Number of components (default 5)");
    s->add_option("--max-iters", cfg.als.max_iters, "ALS sweep limit (default 500)");
    s->add_option("--tol", cfg.als.tol, "Stop when the fit changes less than this (default 1e-8)");
    s->add_option("--restarts", cfg.als.n_restarts, "Random restarts; best fit wins (default 1)");
    s->add_option("--format", cfg.format, "Report format: csv, svg or both (default both)");
  };
  auto mine_opts = [&](CLI::App* s) {
    s->add_option("--target", cfg.target, "Make/model for the left group (default \"DODGE CHARGER\")");
    s->add_option("--min-len", cfg.min_len, "Shortest pattern (default 3)");
    s->add_option("--max-len", cfg.max_len, "Longest pattern (default 4)");
    s->add_option("--top-n", cfg.top_n, "Patterns kept (default 8)");
    s->add_flag("--bonferroni", cfg.bonferroni, "Add a Bonferroni-adjusted p column");
  };
  auto lstm_opts = [&](CLI::App* s) {
    auto& l = cfg.lstm;
    s->add_option("--embed-dim", l.embed_dim, "Embedding size (default 32)");
    s->add_option("--hidden-dim", l.hidden_dim, "LSTM state size (default 64)");
    s->add_option("--layers", l.layers, "Stacked LSTM layers (default 2)");
    s->add_option("--dropout-keep", l.dropout_keep, "Keep probability on non-recurrent links (default 0.75)");
    s->add_option("--bptt-steps", l.bptt_steps, "Truncated BPTT window (default 20)");
    s->add_option("--batch-size", l.batch_size, "Sequences per update (default 8)");
    s->add_option("--epochs", l.epochs, "Training epochs (default 20)");
    s->add_option("--lr", l.lr, "Initial learning rate (default 1.0)");
    s->add_option("--decay-after", l.decay_after, "Epochs at the initial rate (default 6)");
    s->add_option("--lr-decay", l.lr_decay, "Per-epoch decay factor afterwards (default 0.7)");
    s->add_option("--max-grad-norm", l.max_grad_norm, "Gradient clipping norm (default 5)");
    s->add_option("--init-scale", l.init_scale, "Uniform init range (default 0.1)");
  };

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic fleet with planted structure");
  common(synth_cmd);
  synth_cmd->add_option("--spec", cfg.spec, "Fleet spec JSON");
  synth_cmd->add_flag("--demo", cfg.demo, "Use the built-in demo fleet");
  synth_cmd->add_option("--out", cfg.out, "Output directory");

  auto* tensorize_cmd = app.add_subcommand("tensorize", "Build a vehicle x system x time count tensor");
  common(tensorize_cmd);
  inputs(tensorize_cmd);
  tensor_opts(tensorize_cmd);
  tensorize_cmd->add_option("--out", cfg.out, "Tensor file to write");

  auto* parafac_cmd = app.add_subcommand("parafac", "CP/PARAFAC decomposition by alternating least squares");
  common(parafac_cmd);
  als_opts(parafac_cmd);
  parafac_cmd->add_option("--tensor", cfg.tensor, "Tensor file");
  parafac_cmd->add_option("--out", cfg.out, "Model file to write");
  parafac_cmd->add_option("--report-dir", cfg.report_dir, "Also write per-component reports here");

  auto* report_cmd = app.add_subcommand("report", "Per-component factor reports from a CP model");
  common(report_cmd);
  report_cmd->add_option("--model", cfg.model, "CP model file");
  report_cmd->add_option("--out", cfg.out, "Output directory");
  report_cmd->add_option("--format", cfg.format, "csv, svg or both (default both)");

  auto* seqmine_cmd = app.add_subcommand("seqmine", "Differential sequential-pattern mining");
  common(seqmine_cmd);
  inputs(seqmine_cmd);
  mine_opts(seqmine_cmd);
  seqmine_cmd->add_option("--out", cfg.out, "CSV file to write (default: stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train the LSTM next-job model");
  common(train_cmd);
  inputs(train_cmd);
  lstm_opts(train_cmd);
  train_cmd->add_option("--out", cfg.out, "Model file to write");
  train_cmd->add_option("--split", cfg.split, "Where to write the vehicle split (default <out>.split.json)");

  auto* eval_cmd = app.add_subcommand("eval", "Perplexity of a trained model");
  common(eval_cmd);
  inputs(eval_cmd);
  eval_cmd->add_option("--model", cfg.model, "LSTM model file");
  eval_cmd->add_option("--split", cfg.split, "Split file written by train");
  eval_cmd->add_option("--part", cfg.part, "train, valid or test (default test)");

  auto* predict_cmd = app.add_subcommand("predict", "Most likely next jobs");
  common(predict_cmd);
  inputs(predict_cmd);
  predict_cmd->add_option("--model", cfg.model, "LSTM model file");
  predict_cmd->add_option("--prefix", cfg.prefix, "History as ';'-separated system labels");
  predict_cmd->add_option("--unit", cfg.unit, "Use this vehicle's full history as the prefix");
  predict_cmd->add_option("--top-k", cfg.top_k, "Predictions listed (default 5)");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "synth -> tensorize -> parafac -> report, seqmine, train, eval");
  common(pipeline_cmd);
  pipeline_cmd->add_option("--spec", cfg.spec, "Fleet spec JSON");
  pipeline_cmd->add_flag("--demo", cfg.demo, "Use the built-in demo fleet");
  pipeline_cmd->add_option("--out", cfg.out, "Output directory");
  als_opts(pipeline_cmd);
  mine_opts(pipeline_cmd);
  lstm_opts(pipeline_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "error: usage: " << e.what() << "\n";
      return 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    cfg.subcommand = sub->get_name();
    if (!cfg.config.empty()) apply_config_file(sub, cfg.config);
    finalize(cfg);

    if (cfg.subcommand == "synth") return cmd_synth(cfg, out);
    if (cfg.subcommand == "tensorize") return cmd_tensorize(cfg, out);
    if (cfg.subcommand == "parafac") return cmd_parafac(cfg, out);
    if (cfg.subcommand == "report") return cmd_report(cfg, out);
    if (cfg.subcommand == "seqmine") return cmd_seqmine(cfg, out);
    if (cfg.subcommand == "train") return cmd_train(cfg, out);
    if (cfg.subcommand == "eval") return cmd_eval(cfg, out);
    if (cfg.subcommand == "predict") return cmd_predict(cfg, out);
    return cmd_pipeline(cfg, out);
  } catch (const UsageError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << to_string(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << e.what() << "\n";
    return exit_code(ErrorCategory::kIo);
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int n = 1; n < argc; ++n) args.emplace_back(argv[n]);
  return run(args, std::cout, std::cerr);
}

}  // namespace fleetmx::cli
