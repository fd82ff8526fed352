// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fleetmx/cp.hpp"
#include "fleetmx/ingest.hpp"
#include "fleetmx/seqmine.hpp"
#include "fleetmx/seqmodel.hpp"
#include "fleetmx/synth.hpp"
#include "fleetmx/tensor.hpp"
#include "oracles.hpp"

using namespace fleetmx;
namespace fs = std::filesystem;
using tensor::Dims;
using tensor::Matrix;
using tensor::Tensor3;

namespace {

// Tolerances and budgets.
constexpr double kKernelTol = 1e-10;
constexpr double kKernelSeconds = 10.0;
constexpr double kRecoveryFit = 0.999;
constexpr int kRecoveryIters = 200;
constexpr double kRecoveryCongruence = 0.99;
constexpr double kNoisyCongruence = 0.95;
constexpr double kNoiseLevel = 0.10;
constexpr double kConditionLimit = 10.0;
constexpr double kRecoverySeconds = 30.0;
constexpr double kMonotoneSlack = 1e-12;
constexpr double kTimeMass = 0.70;
constexpr double kSystemMass = 0.60;
constexpr double kSeasonalSeconds = 60.0;
constexpr double kMotifP = 1e-4;
constexpr double kMotifIRatio = 10.0;
constexpr double kZRoundOff = 1e-12;
constexpr double kSqrt20Tol = 1e-9;
constexpr double kCdfTol = 1e-7;
constexpr double kPrintedZ = 10.4;
constexpr double kPrintedZTol = 0.2;
constexpr double kGradTol = 1e-4;
constexpr double kCorruptFloor = 1e-2;
constexpr double kAlternatingPpl = 1.05;
constexpr double kMarkovRelTol = 0.10;
constexpr double kUniformTol = 1e-9;
constexpr double kLearningSeconds = 300.0;

int failures = 0;
std::vector<std::vector<double>> all_traces;  // every ALS fit trace produced here

void report(int n, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  if (!pass) ++failures;
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

cp::CpModel als(const Tensor3& t, const cp::AlsOptions& o) {
  cp::CpModel m = cp::cp_als(t, o);
  all_traces.push_back(m.fit_trace);
  return m;
}

// Largest over smallest singular value, from Jacobi eigenvalues of the Gram matrix.
double condition_number(const Matrix& f) {
  const std::size_t n = f.cols();
  std::vector<double> g(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t r = 0; r < f.rows(); ++r) g[a * n + b] += f(r, a) * f(r, b);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += g[p * n + q] * g[p * n + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(g[p * n + q]) < 1e-300) continue;
        const double theta = (g[q * n + q] - g[p * n + p]) / (2.0 * g[p * n + q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double gkp = g[k * n + p], gkq = g[k * n + q];
          g[k * n + p] = c * gkp - s * gkq;
          g[k * n + q] = s * gkp + c * gkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double gpk = g[p * n + k], gqk = g[q * n + k];
          g[p * n + k] = c * gpk - s * gqk;
          g[q * n + k] = s * gpk + c * gqk;
        }
      }
  }
  double lo = INFINITY, hi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lo = std::min(lo, g[k * n + k]);
    hi = std::max(hi, g[k * n + k]);
  }
  return lo > 0.0 ? std::sqrt(hi / lo) : INFINITY;
}

Matrix gaussian_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = nd(gen);
  return m;
}

struct DemoData {
  synth::FleetSpec spec;
  synth::Generated gen;
  std::vector<ingest::VehicleRecord> vehicles;
  ingest::MaintenanceTable maintenance;
};

const DemoData& demo() {
  static const DemoData d = [] {
    DemoData out;
    out.spec = synth::demo_spec();
    out.gen = synth::generate(out.spec);
    std::istringstream vin(out.gen.vehicles_csv), min(out.gen.maintenance_csv);
    out.vehicles = ingest::parse_vehicles(vin);
    out.maintenance = ingest::parse_maintenance(min);
    return out;
  }();
  return d;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<std::size_t> dim(1, 6), rank(1, 4);
  double worst = 0.0;
  bool round_trip = true, unfold_exact = true;
  for (int trial = 0; trial < 200; ++trial) {
    const Dims d{dim(gen), dim(gen), dim(gen)};
    const std::size_t r = rank(gen);
    const Tensor3 t = oracle::random_tensor(gen, d);
    const Matrix f[3] = {oracle::random_matrix(gen, d.i, r), oracle::random_matrix(gen, d.j, r),
                         oracle::random_matrix(gen, d.k, r)};
    for (int mode = 1; mode <= 3; ++mode) {
      const Matrix& lo = mode == 1 ? f[1] : f[0];
      const Matrix& hi = mode == 3 ? f[1] : f[2];
      const Matrix got = tensor::mttkrp(t, lo, hi, mode);
      const Matrix want = oracle::mttkrp_explicit(t, lo, hi, mode);
      for (std::size_t n = 0; n < got.data().size(); ++n)
        worst = std::max(worst, std::fabs(got.data()[n] - want.data()[n]));
      const Matrix u = tensor::unfold(t, mode);
      unfold_exact = unfold_exact && u == oracle::unfold_by_definition(t, mode);
      const Tensor3 back = tensor::fold(u, mode, d);
      round_trip = round_trip && std::equal(back.data().begin(), back.data().end(), t.data().begin());
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst <= kKernelTol && round_trip && unfold_exact && secs < kKernelSeconds,
         "200 tensors: max |mttkrp - unfold*khatri_rao| = " + num(worst, 3) + " (tol " + num(kKernelTol) +
             "), fold/unfold exact: " + (round_trip && unfold_exact ? "yes" : "no") + ", " + num(secs, 3) + " s");
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(202);
  const Matrix a = gaussian_matrix(gen, 30, 3), b = gaussian_matrix(gen, 20, 3), c = gaussian_matrix(gen, 24, 3);
  const std::vector<double> w = {3.0, 2.0, 1.0};
  const double cond = std::max({condition_number(a), condition_number(b), condition_number(c)});
  const Tensor3 clean = oracle::cp_tensor(a, b, c, w);
  const cp::CpModel truth = cp::make_model(a, b, c, w);

  const cp::CpModel m = als(clean, {3, kRecoveryIters, 1e-12, 7, 1});
  const auto cd = cp::congruence_detail(m, truth);
  const double min_mode = *std::min_element(cd.per_mode.begin(), cd.per_mode.end());

  Tensor3 noisy = clean;
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> noise(clean.size());
  double nn = 0.0;
  for (double& v : noise) {
    v = nd(gen);
    nn += v * v;
  }
  const double scale = kNoiseLevel * tensor::frob_norm(clean) / std::sqrt(nn);
  for (std::size_t n = 0; n < noise.size(); ++n) noisy.data()[n] += scale * noise[n];
  const cp::CpModel mn = als(noisy, {3, 500, 1e-10, 7, 1});
  const double noisy_cong = cp::congruence(mn, truth);
  const double secs = seconds_since(t0);

  const bool pass = cond < kConditionLimit && m.fit >= kRecoveryFit && m.iterations <= kRecoveryIters &&
                    min_mode >= kRecoveryCongruence && noisy_cong >= kNoisyCongruence && secs < kRecoverySeconds;
  report(2, pass,
         "rank-3 30x20x24 (factor cond " + num(cond, 3) + "): fit " + num(m.fit, 8) + " in " +
             std::to_string(m.iterations) + " iters, min per-mode congruence " + num(min_mode, 6) +
             "; 10% noise congruence " + num(noisy_cong, 4) + ", " + num(secs, 3) + " s");
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const DemoData& d = demo();
  ingest::TensorizeSpec ts;
  ts.window_start = d.spec.start;
  const int last = d.spec.start.index() + d.spec.n_months - 1;
  ts.window_end = ingest::YearMonth{last / 12, last % 12 + 1};
  const auto build = ingest::build_tensor(d.vehicles, d.maintenance.records, ts);
  const cp::CpModel m = als(build.tensor, {5, 500, 1e-8, 20170901, 1});

  // Planted months are May..September; planted systems are the mower pair.
  const std::set<std::string> systems = {"MOWER BLADES & DECK", "TIRES/TUBES/LINERS & VALVES"};
  double best_time = 0.0, best_sys = 0.0;
  std::size_t best_r = 0;
  bool found = false;
  for (std::size_t r = 0; r < m.rank(); ++r) {
    double tin = 0.0, tall = 0.0, sin = 0.0, sall = 0.0;
    for (std::size_t k = 0; k < m.c.rows(); ++k) {
      const int month = std::stoi(m.labels[2][k].substr(5, 2));
      tall += std::fabs(m.c(k, r));
      if (month >= 5 && month <= 9) tin += std::fabs(m.c(k, r));
    }
    for (std::size_t j = 0; j < m.b.rows(); ++j) {
      sall += std::fabs(m.b(j, r));
      if (systems.count(m.labels[1][j])) sin += std::fabs(m.b(j, r));
    }
    const double tm = tin / tall, sm = sin / sall;
    const bool ok = tm >= kTimeMass && sm >= kSystemMass;
    if (ok && !found) {
      found = true;
      best_time = tm;
      best_sys = sm;
      best_r = r;
    } else if (!found && tm + sm > best_time + best_sys) {
      best_time = tm;
      best_sys = sm;
      best_r = r;
    }
  }
  const double secs = seconds_since(t0);
  report(4, found && secs < kSeasonalSeconds,
         "demo fleet R=5 (fit " + num(m.fit, 4) + "): component " + std::to_string(best_r + 1) + " time mass " +
             num(best_time, 3) + " on May-Sep, system mass " + num(best_sys, 3) + " on mower systems, " +
             num(secs, 3) + " s");
}

void criterion3() {
  double worst = 0.0;
  std::size_t sweeps = 0;
  std::mt19937_64 gen(303);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(2, 8);
    const Tensor3 t = oracle::random_tensor(gen, {dim(gen), dim(gen), dim(gen)});
    als(t, {1 + trial % 5, 300, 1e-12, static_cast<std::uint64_t>(trial), 1 + trial % 3});
  }
  for (const auto& trace : all_traces) {
    for (std::size_t n = 1; n < trace.size(); ++n) worst = std::max(worst, trace[n - 1] - trace[n]);
    sweeps += trace.size();
  }
  report(3, worst <= kMonotoneSlack,
         std::to_string(all_traces.size()) + " ALS runs, " + std::to_string(sweeps) + " sweeps: largest fit decrease " +
             num(worst, 3) + " (slack " + num(kMonotoneSlack) + ")");
}

void criterion5() {
  const DemoData& d = demo();
  const auto set = seqmine::extract_sequences(d.maintenance.records, d.vehicles);
  const auto& motif = d.spec.motifs.front();
  seqmine::Pattern planted;
  for (const auto& l : motif.labels)
    planted.push_back(static_cast<int>(std::find(set.labels.begin(), set.labels.end(), l) - set.labels.begin()));
  const auto rows = seqmine::differential(set.sequences, motif.make_model);
  const bool top = !rows.empty() && rows[0].pattern == planted;
  const bool strong = top && rows[0].p < kMotifP && rows[0].i_ratio > kMotifIRatio;

  // Zero right support.
  const std::vector<seqmine::EventSequence> cap_fleet = {
      {"1", "SMEAL SST PUMPER", {0, 1, 0}}, {"2", "SMEAL SST PUMPER", {0, 1, 0, 2}}, {"3", "OTHER", {2, 2, 2}}};
  const auto cap_rows = seqmine::differential(cap_fleet, "SMEAL SST PUMPER", {3, 3, 8});
  std::ostringstream csv;
  seqmine::write_table_csv(csv, cap_rows, {"EX", "PUMP", "OTHER"});
  const bool cap = !cap_rows.empty() && cap_rows[0].i_ratio == 10000.0 &&
                   csv.str().find(",0.0000,10000.0,") != std::string::npos;

  // Brute-force agreement.
  std::mt19937_64 gen(505);
  std::size_t fleets = 0, mismatches = 0;
  double z_dev = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<seqmine::EventSequence> seqs;
    std::vector<oracle::Seq> left, right;
    const std::size_t n = 2 + gen() % 19;
    const unsigned alphabet = 2 + static_cast<unsigned>(gen() % 4);
    for (std::size_t v = 0; v < n; ++v) {
      const bool target = v == 0 || (v != 1 && gen() % 2 == 0);
      std::vector<int> e(gen() % 13);
      for (int& x : e) x = static_cast<int>(gen() % alphabet);
      (target ? left : right).push_back(e);
      seqs.push_back({std::to_string(v), target ? "T" : "R", e});
    }
    const std::size_t top_n = 1 + gen() % 10;
    const auto got = seqmine::differential(seqs, "T", {3, 4, top_n});
    const auto want = oracle::differential(left, right, 3, 4, top_n);
    ++fleets;
    if (got.size() != want.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t r = 0; r < got.size(); ++r) {
      const auto& g = got[r];
      const auto& w = want[r];
      const bool same = g.pattern == w.pattern && g.left_support == w.left && g.right_support == w.right &&
                        g.left_windows == w.left_windows && g.right_windows == w.right_windows &&
                        g.left_norm == w.left_norm && g.right_norm == w.right_norm && g.i_ratio == w.i_ratio;
      mismatches += same ? 0 : 1;
      z_dev = std::max({z_dev, std::fabs(g.z - w.z) / std::max(1.0, std::fabs(w.z)), std::fabs(g.p - w.p)});
    }
  }
  const bool brute = mismatches == 0 && z_dev <= kZRoundOff;

  std::string detail = "demo motif ";
  detail += top ? "ranks first" : "does NOT rank first";
  if (!rows.empty())
    detail += " (left norm " + num(rows[0].left_norm, 4) + ", right norm " + num(rows[0].right_norm, 4) +
              ", i-ratio " + num(rows[0].i_ratio, 4) + ", p " + num(rows[0].p, 3) + ")";
  detail += "; zero right support -> " + std::string(cap ? "10000.0 / \"0.0000,10000.0\"" : "wrong cap");
  detail += "; brute force on " + std::to_string(fleets) + " fleets: " + std::to_string(mismatches) +
            " mismatches, max z/p round-off " + num(z_dev, 3);
  report(5, strong && cap && brute, detail);
}

void criterion6() {
  const auto hand = seqmine::two_prop_z(10, 10, 0, 10);
  const double dz = std::fabs(std::fabs(hand.z) - std::sqrt(20.0));

  std::ifstream in(std::string(FLEETMX_TEST_DATA_DIR) + "/normal_cdf_reference.txt");
  double cdf_err = in ? 0.0 : INFINITY;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double z, ref;
    ss >> z >> ref;
    cdf_err = std::max(cdf_err, std::fabs(seqmine::normal_cdf(z) - ref));
    ++rows;
  }

  const auto charger = seqmine::two_prop_z(187, 4960, 126, 18806);
  const double zdiff = std::fabs(std::fabs(charger.z) - kPrintedZ);
  const bool pass = dz <= kSqrt20Tol && rows == 401 && cdf_err < kCdfTol && zdiff <= kPrintedZTol;
  report(6, pass,
         "|z|-sqrt(20) = " + num(dz, 3) + "; CDF max error " + num(cdf_err, 3) + " over " + std::to_string(rows) +
             " reference points; fleet row (187/4960 vs 126/18806) |z| = " + num(std::fabs(charger.z), 4) +
             " vs expected 10.4 (diff " + num(zdiff, 3) + ", tol " + num(kPrintedZTol) + "), p " +
             num(charger.p, 3));
}

void criterion7() {
  seqmodel::LstmConfig c;
  c.embed_dim = 4;
  c.hidden_dim = 5;
  c.layers = 2;
  c.init_scale = 0.5;
  const seqmodel::TokenSeq s = {"A", "B", "C", "A", "B", "B", "A"};
  const auto good = seqmodel::grad_check(c, s);
  seqmodel::GradCheckOptions bad;
  bad.corrupt_forget_gate = true;
  const auto corrupt = seqmodel::grad_check(c, s, bad);
  report(7, good.max_rel_error < kGradTol && corrupt.max_rel_error > kCorruptFloor,
         "max relative error " + num(good.max_rel_error, 3) + " (worst block " + good.worst_block +
             "); corrupted forget gate " + num(corrupt.max_rel_error, 3));
}

// First-order chain over five systems plus the terminator. Row s puts
// 0.6/0.2/0.1/0.04 on s+1..s+4 (mod 5) and 0.06 on EOS; sequences start from
// the EOS row.
struct Markov {
  static constexpr int kStates = 5;
  std::vector<std::vector<double>> p;  // index kStates is EOS
  Markov() : p(kStates + 1, std::vector<double>(kStates + 1, 0.0)) {
    for (int s = 0; s < kStates; ++s) {
      const double w[4] = {0.6, 0.2, 0.1, 0.04};
      for (int k = 0; k < 4; ++k) p[s][(s + 1 + k) % kStates] += w[k];
      p[s][kStates] = 0.06;
    }
    p[kStates] = {0.5, 0.2, 0.1, 0.1, 0.1, 0.0};
  }
  // Per-item entropy under the stationary law of the renewal chain.
  double entropy() const {
    const std::size_t n = p.size();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < 10000; ++it) {
      std::vector<double> next(n, 0.0);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) next[b] += pi[a] * p[a][b];
      pi = next;
    }
    double h = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (p[a][b] > 0) h -= pi[a] * p[a][b] * std::log(p[a][b]);
    return h;
  }
  std::vector<seqmodel::TokenSeq> sample(std::mt19937_64& gen, std::size_t count) const {
    std::vector<seqmodel::TokenSeq> out;
    for (std::size_t n = 0; n < count; ++n) {
      seqmodel::TokenSeq s;
      int state = kStates;
      while (true) {
        std::discrete_distribution<int> row(p[static_cast<std::size_t>(state)].begin(),
                                            p[static_cast<std::size_t>(state)].end());
        state = row(gen);
        if (state == kStates) break;
        s.push_back(std::string(1, static_cast<char>('A' + state)));
      }
      out.push_back(s);
    }
    return out;
  }
};

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  seqmodel::LstmConfig cfg;  // defaults throughout

  auto alternating = [](std::size_t n, std::size_t len) {
    std::vector<seqmodel::TokenSeq> out(n);
    for (auto& s : out)
      for (std::size_t k = 0; k < len; ++k) s.push_back(k % 2 ? "B" : "A");
    return out;
  };
  const auto alt_model = seqmodel::train(alternating(200, 8), alternating(50, 8), cfg);
  const double alt_ppl = seqmodel::perplexity(alt_model, alternating(50, 8));
  const auto t_alt = seconds_since(t0);

  const Markov chain;
  std::mt19937_64 gen(808);
  const auto tr = chain.sample(gen, 600), va = chain.sample(gen, 100), te = chain.sample(gen, 200);
  const auto mk_model = seqmodel::train(tr, va, cfg);
  const double mk_ppl = seqmodel::perplexity(mk_model, te);
  const double unigram = seqmodel::perplexity(seqmodel::unigram_baseline(tr), te);
  const double exp_h = std::exp(chain.entropy());
  const double rel = std::fabs(mk_ppl - exp_h) / exp_h;

  seqmodel::SeqModel uniform = mk_model;
  std::fill(uniform.params.proj.data().begin(), uniform.params.proj.data().end(), 0.0);
  std::fill(uniform.params.proj_bias.begin(), uniform.params.proj_bias.end(), 0.0);
  const double v = static_cast<double>(uniform.vocab.size());
  const double uni_dev = std::fabs(seqmodel::perplexity(uniform, te) - v);
  const double secs = seconds_since(t0);

  const bool pass = alt_ppl < kAlternatingPpl && rel <= kMarkovRelTol && mk_ppl < unigram && uni_dev <= kUniformTol &&
                    secs < kLearningSeconds;
  report(8, pass,
         "alternating test ppl " + num(alt_ppl, 6) + " (" + num(t_alt, 3) + " s); Markov test ppl " + num(mk_ppl, 5) +
             " vs exp(H) " + num(exp_h, 5) + " (rel " + num(rel, 3) + "), unigram " + num(unigram, 5) +
             "; uniform |ppl - V| " + num(uni_dev, 3) + "; " + num(secs, 4) + " s total");
}

void criterion9() {
  const fs::path root = fs::temp_directory_path() / "fleetmx_acceptance_repro";
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  const std::string bin = FLEETMX_CLI_PATH;
  auto run = [&](const fs::path& out) {
    const std::string cmd = "\"" + bin + "\" pipeline --demo --out \"" + out.string() + "\" > \"" +
                            (root / (out.filename().string() + ".log")).string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  fs::create_directories(root);
  const int ca = run(a), cb = run(b);

  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a).string());
  std::sort(files.begin(), files.end());
  std::size_t same = 0;
  std::string first_diff;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  std::size_t files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) files_b += e.is_regular_file() ? 1 : 0;
  for (const auto& f : files) {
    if (fs::exists(b / f) && slurp(a / f) == slurp(b / f)) {
      ++same;
    } else if (first_diff.empty()) {
      first_diff = f;
    }
  }
  const bool pass = ca == 0 && cb == 0 && !files.empty() && same == files.size() && files_b == files.size();
  report(9, pass,
         "pipeline --demo twice: exit " + std::to_string(ca) + "/" + std::to_string(cb) + ", " +
             std::to_string(same) + "/" + std::to_string(files.size()) + " artifacts byte-identical" +
             (first_diff.empty() ? "" : " (first difference: " + first_diff + ")"));
  if (pass) fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> steps = {
      {1, criterion1}, {2, criterion2}, {4, criterion4}, {3, criterion3}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  for (const auto& [n, fn] : steps) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(n, false, std::string("threw: ") + e.what());
    }
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
