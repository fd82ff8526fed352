#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fleetmx/tensor.hpp"

namespace fleetmx::cp {

using tensor::Matrix;
using tensor::Tensor3;

/// Rank-R CP model with unit-norm factor columns and explicit weights,
/// components ordered by non-increasing weight.
struct CpModel {
  Matrix a;  // I × R, vehicle mode
  Matrix b;  // J × R, system mode
  Matrix c;  // K × R, time mode
  std::vector<double> weights;
  tensor::AxisLabels labels;

  double fit = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Fit after every sweep of the winning run.
  std::vector<double> fit_trace;
  std::vector<std::string> warnings;

  std::size_t rank() const noexcept { return weights.size(); }
  tensor::Dims dims() const noexcept { return {a.rows(), b.rows(), c.rows()}; }
};

struct AlsOptions {
  int rank = 1;
  int max_iters = 500;
  double tol = 1e-8;
  std::uint64_t seed = 20170901;
  int n_restarts = 1;
};

void validate(const AlsOptions& opts);

/// Normalizes columns into weights, applies the sign convention, and sorts
/// components. Use this to wrap planted or externally produced factors.
CpModel make_model(Matrix a, Matrix b, Matrix c, std::vector<double> weights = {});

Tensor3 reconstruct(const CpModel& model);

/// Alternating least squares; returns the best of opts.n_restarts runs.
CpModel cp_als(const Tensor3& t, const AlsOptions& opts);

/// Single ALS run from explicit starting factors for modes 2 and 3
/// (mode 1 is solved first). Exposed for tests and restarts.
CpModel cp_als_from(const Tensor3& t, const AlsOptions& opts, Matrix b0, Matrix c0);

/// 1 − ‖T − T̂‖ / ‖T‖. Materializes the residual up to 10⁶ cells and uses
/// the Gram-matrix closed form above that.
double fit_score(const Tensor3& t, const CpModel& model);

struct Congruence {
  double score = 0.0;               // mean matched triple-product score
  std::array<double, 3> per_mode{};  // mean |cos| per mode over matched pairs
  std::vector<std::size_t> match;   // match[r] = component of m2 paired with r
};

/// Greedy component matching by the product of absolute cosines across the
/// three modes.
Congruence congruence_detail(const CpModel& m1, const CpModel& m2);
double congruence(const CpModel& m1, const CpModel& m2);

struct LabeledLoading {
  std::string label;
  double loading = 0.0;
};

struct FactorReport {
  std::size_t component = 0;  // 1-based
  double weight = 0.0;
  std::vector<LabeledLoading> vehicle;
  std::vector<LabeledLoading> system;
  std::vector<LabeledLoading> time;
};

/// component is 1-based.
FactorReport factor_report(const CpModel& model, std::size_t component);

// CSV columns: component,mode,label,loading. mode is one of vehicle, system,
// time; each component additionally has one row with mode "weight" and label
// "lambda".
void write_report_csv(std::ostream& out, const std::vector<FactorReport>& reports);
/// Three stacked bar-chart panels (vehicle, system, time) for one component.
void write_report_svg(std::ostream& out, const FactorReport& report);

// Plain-text model format; see README for the grammar.
void write_model(std::ostream& out, const CpModel& model);
CpModel read_model(std::istream& in);
void save_model(const std::string& path, const CpModel& model);
CpModel load_model(const std::string& path);

}  // namespace fleetmx::cp
