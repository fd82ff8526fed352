#include "fleetmx/cp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fleetmx/error.hpp"
#include "fleetmx/rng.hpp"
#include "text_util.hpp"

namespace fleetmx::cp {

namespace {

constexpr std::size_t kDirectFitLimit = 1'000'000;
constexpr double kRidgeScale = 1e-12;
constexpr double kDegeneracyThreshold = -0.95;

// Lower Cholesky factor of v, or false when a pivot is not safely positive.
bool cholesky(const Matrix& v, Matrix& low) {
  const std::size_t n = v.rows();
  low = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = v(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= low(j, p) * low(j, p);
    if (!(d > 1e-13 * v(j, j))) return false;
    low(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = v(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= low(i, p) * low(j, p);
      low(i, j) = s / low(j, j);
    }
  }
  return true;
}

// Solves x · V = m for every row of m, V symmetric positive semidefinite.
// When V is numerically singular a ridge of kRidgeScale·trace(V) is added to
// the diagonal; if Cholesky still breaks down, pivoted elimination is used.
Matrix solve_normal_rows(const Matrix& m, Matrix v) {
  const std::size_t n = v.rows();
  Matrix low;
  bool spd = cholesky(v, low);
  if (!spd) {
    double trace = 0.0;
    for (std::size_t r = 0; r < n; ++r) trace += v(r, r);
    const double ridge = kRidgeScale * trace;
    for (std::size_t r = 0; r < n; ++r) v(r, r) += ridge;
    spd = cholesky(v, low);
  }

  Matrix out(m.rows(), n);
  std::vector<double> y(n);
  if (spd) {
    for (std::size_t row = 0; row < m.rows(); ++row) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = m(row, i);
        for (std::size_t p = 0; p < i; ++p) s -= low(i, p) * y[p];
        y[i] = s / low(i, i);
      }
      for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t p = i + 1; p < n; ++p) s -= low(p, i) * out(row, p);
        out(row, i) = s / low(i, i);
      }
    }
    return out;
  }

  // Gaussian elimination with partial pivoting on [V | mᵀ]; variables with a
  // vanishing pivot are set to zero.
  const std::size_t cols = m.rows();
  Matrix aug(n, n + cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = v(i, j);
    for (std::size_t c = 0; c < cols; ++c) aug(i, n + c) = m(c, i);
  }
  double scale = 0.0;
  for (double x : v.data()) scale = std::max(scale, std::abs(x));
  const double tiny = std::max(scale, 1.0) * 1e-14;
  std::vector<bool> dead(n, false);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(aug(r, col)) > std::abs(aug(piv, col))) piv = r;
    if (std::abs(aug(piv, col)) <= tiny) {
      dead[col] = true;
      continue;
    }
    if (piv != col)
      for (std::size_t c = 0; c < n + cols; ++c) std::swap(aug(piv, c), aug(col, c));
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = aug(r, col) / aug(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n + cols; ++c) aug(r, c) -= f * aug(col, c);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < cols; ++c) out(c, i) = dead[i] ? 0.0 : aug(i, n + c) / aug(i, i);
  return out;
}

// Scales columns to unit norm, writing the norms into weights.
void normalize_columns(Matrix& f, std::vector<double>& weights) {
  weights.assign(f.cols(), 0.0);
  for (std::size_t c = 0; c < f.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < f.rows(); ++r) s += f(r, c) * f(r, c);
    const double norm = std::sqrt(s);
    weights[c] = norm;
    if (norm > 0.0)
      for (std::size_t r = 0; r < f.rows(); ++r) f(r, c) /= norm;
  }
}

double column_sum(const Matrix& f, std::size_t c) {
  double s = 0.0;
  for (std::size_t r = 0; r < f.rows(); ++r) s += f(r, c);
  return s;
}

void flip_column(Matrix& f, std::size_t c) {
  for (std::size_t r = 0; r < f.rows(); ++r) f(r, c) = -f(r, c);
}

double cosine(const Matrix& x, std::size_t cx, const Matrix& y, std::size_t cy) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    dot += x(r, cx) * y(r, cy);
    nx += x(r, cx) * x(r, cx);
    ny += y(r, cy) * y(r, cy);
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return dot / std::sqrt(nx * ny);
}

Matrix permute_columns(const Matrix& f, const std::vector<std::size_t>& order) {
  Matrix out(f.rows(), f.cols());
  for (std::size_t n = 0; n < order.size(); ++n)
    for (std::size_t r = 0; r < f.rows(); ++r) out(r, n) = f(r, order[n]);
  return out;
}

// Sign convention, weight ordering and diagnostics. Factor columns must
// already be unit norm.
void canonicalize(CpModel& m) {
  const std::size_t rank = m.rank();
  for (std::size_t r = 0; r < rank; ++r) {
    if (column_sum(m.a, r) < 0.0) {
      flip_column(m.a, r);
      flip_column(m.c, r);
    }
    if (column_sum(m.b, r) < 0.0) {
      flip_column(m.b, r);
      flip_column(m.c, r);
    }
  }

  std::vector<std::size_t> order(rank);
  std::iota(order.begin(), order.end(), 0);
  auto column_key = [&](std::size_t r) {
    std::vector<double> key;
    for (const Matrix* f : {&m.a, &m.b, &m.c}) {
      const auto col = f->column(r);
      key.insert(key.end(), col.begin(), col.end());
    }
    return key;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (m.weights[x] != m.weights[y]) return m.weights[x] > m.weights[y];
    const auto kx = column_key(x);
    const auto ky = column_key(y);
    return std::lexicographical_compare(kx.begin(), kx.end(), ky.begin(), ky.end());
  });
  m.a = permute_columns(m.a, order);
  m.b = permute_columns(m.b, order);
  m.c = permute_columns(m.c, order);
  std::vector<double> w(rank);
  for (std::size_t n = 0; n < rank; ++n) w[n] = m.weights[order[n]];
  m.weights = std::move(w);

  for (std::size_t r = 0; r < rank; ++r) {
    if (m.weights[r] == 0.0) m.warnings.push_back("component " + std::to_string(r + 1) + " collapsed to zero");
    for (std::size_t s = r + 1; s < rank; ++s) {
      const double prod = cosine(m.a, r, m.a, s) * cosine(m.b, r, m.b, s) * cosine(m.c, r, m.c, s);
      if (prod < kDegeneracyThreshold)
        m.warnings.push_back("components " + std::to_string(r + 1) + " and " + std::to_string(s + 1) +
                             " look degenerate (congruence product " + detail::fixed(prod, 4) + ")");
    }
  }
}

Matrix random_factor(std::size_t rows, std::size_t rank, Rng& rng) {
  Matrix f(rows, rank);
  for (double& v : f.data()) v = rng.uniform();
  return f;
}

double direct_residual_norm(const Tensor3& t, const CpModel& m) {
  const auto d = t.dims();
  const std::size_t rank = m.rank();
  std::vector<double> ab(rank);
  double s = 0.0;
  for (std::size_t i = 0; i < d.i; ++i)
    for (std::size_t j = 0; j < d.j; ++j) {
      for (std::size_t r = 0; r < rank; ++r) ab[r] = m.weights[r] * m.a(i, r) * m.b(j, r);
      for (std::size_t k = 0; k < d.k; ++k) {
        double x = 0.0;
        for (std::size_t r = 0; r < rank; ++r) x += ab[r] * m.c(k, r);
        const double e = t(i, j, k) - x;
        s += e * e;
      }
    }
  return std::sqrt(s);
}

// ‖T − T̂‖² = ‖T‖² − 2⟨T, T̂⟩ + ‖T̂‖², with ⟨T, T̂⟩ taken from the mode-3
// MTTKRP of the current A and B.
double gram_residual_norm(double norm_t, const Matrix& mttkrp3, const CpModel& m) {
  double inner = 0.0;
  for (std::size_t k = 0; k < m.c.rows(); ++k)
    for (std::size_t r = 0; r < m.rank(); ++r) inner += mttkrp3(k, r) * m.weights[r] * m.c(k, r);
  const double model_sq = tensor::kruskal_norm_squared(m.a, m.b, m.c, m.weights);
  return std::sqrt(std::max(0.0, norm_t * norm_t - 2.0 * inner + model_sq));
}

void check_shapes(const Tensor3& t, const CpModel& m) {
  require(m.dims() == t.dims(), ErrorCategory::kDimensionMismatch, "model dims do not match tensor");
  require(m.a.cols() == m.rank() && m.b.cols() == m.rank() && m.c.cols() == m.rank(),
          ErrorCategory::kDimensionMismatch, "factor ranks do not match weights");
}

}  // namespace

void validate(const AlsOptions& opts) {
  require(opts.rank >= 1, ErrorCategory::kInvalidArgument, "rank must be >= 1");
  require(opts.max_iters >= 1, ErrorCategory::kInvalidArgument, "max_iters must be >= 1");
  require(opts.tol > 0.0 && opts.tol < 1.0, ErrorCategory::kInvalidArgument, "tol must lie in (0, 1)");
  require(opts.n_restarts >= 1, ErrorCategory::kInvalidArgument, "n_restarts must be >= 1");
}

CpModel make_model(Matrix a, Matrix b, Matrix c, std::vector<double> weights) {
  const std::size_t rank = a.cols();
  require(b.cols() == rank && c.cols() == rank, ErrorCategory::kDimensionMismatch,
          "factor matrices have different column counts");
  if (weights.empty()) weights.assign(rank, 1.0);
  require(weights.size() == rank, ErrorCategory::kDimensionMismatch, "weights length must equal rank");
  CpModel m;
  std::vector<double> na, nb, nc;
  normalize_columns(a, na);
  normalize_columns(b, nb);
  normalize_columns(c, nc);
  m.weights.resize(rank);
  for (std::size_t r = 0; r < rank; ++r) {
    m.weights[r] = weights[r] * na[r] * nb[r] * nc[r];
    if (m.weights[r] < 0.0) {
      m.weights[r] = -m.weights[r];
      for (std::size_t k = 0; k < c.rows(); ++k) c(k, r) = -c(k, r);
    }
  }
  m.a = std::move(a);
  m.b = std::move(b);
  m.c = std::move(c);
  const auto d = m.dims();
  m.labels = Tensor3(d).labels();
  canonicalize(m);
  return m;
}

Tensor3 reconstruct(const CpModel& model) {
  Tensor3 t = tensor::reconstruct(model.a, model.b, model.c, model.weights);
  const auto d = t.dims();
  for (int mode = 1; mode <= 3; ++mode)
    if (model.labels[mode - 1].size() == d[mode]) t.set_labels(mode, model.labels[mode - 1]);
  return t;
}

CpModel cp_als_from(const Tensor3& t, const AlsOptions& opts, Matrix b, Matrix c) {
  validate(opts);
  const auto d = t.dims();
  const auto rank = static_cast<std::size_t>(opts.rank);
  require(d.i > 0 && d.j > 0 && d.k > 0, ErrorCategory::kInvalidArgument, "tensor dims must be positive");
  require(b.rows() == d.j && c.rows() == d.k && b.cols() == rank && c.cols() == rank,
          ErrorCategory::kDimensionMismatch, "initial factors do not match tensor/rank");
  const double norm_t = tensor::frob_norm(t);
  require(norm_t > 0.0, ErrorCategory::kInvalidArgument, "cannot decompose a zero tensor (fit undefined)");

  CpModel m;
  m.b = std::move(b);
  m.c = std::move(c);
  m.labels = t.labels();
  const bool direct = t.size() <= kDirectFitLimit;

  double fit_old = 0.0;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    m.a = solve_normal_rows(tensor::mttkrp(t, m.b, m.c, 1), tensor::hadamard(tensor::gram(m.b), tensor::gram(m.c)));
    normalize_columns(m.a, m.weights);
    m.b = solve_normal_rows(tensor::mttkrp(t, m.a, m.c, 2), tensor::hadamard(tensor::gram(m.a), tensor::gram(m.c)));
    normalize_columns(m.b, m.weights);
    const Matrix m3 = tensor::mttkrp(t, m.a, m.b, 3);
    m.c = solve_normal_rows(m3, tensor::hadamard(tensor::gram(m.a), tensor::gram(m.b)));
    normalize_columns(m.c, m.weights);

    const double resid = direct ? direct_residual_norm(t, m) : gram_residual_norm(norm_t, m3, m);
    const double fit = 1.0 - resid / norm_t;
    m.fit_trace.push_back(fit);
    m.fit = fit;
    m.iterations = iter;
    if (iter > 1 && std::abs(fit - fit_old) < opts.tol) {
      m.converged = true;
      break;
    }
    fit_old = fit;
  }

  if (rank > d.i * d.j && rank > d.j * d.k && rank > d.i * d.k)
    m.warnings.push_back("rank " + std::to_string(rank) + " exceeds every pairwise dimension product");
  canonicalize(m);
  return m;
}

CpModel cp_als(const Tensor3& t, const AlsOptions& opts) {
  validate(opts);
  const auto d = t.dims();
  const auto rank = static_cast<std::size_t>(opts.rank);
  CpModel best;
  bool have_best = false;
  for (int run = 0; run < opts.n_restarts; ++run) {
    Rng rng(Rng::derive_seed(opts.seed, static_cast<std::uint64_t>(run)));
    Matrix b0 = random_factor(d.j, rank, rng);
    Matrix c0 = random_factor(d.k, rank, rng);
    CpModel m = cp_als_from(t, opts, std::move(b0), std::move(c0));
    if (!have_best || m.fit > best.fit) {
      best = std::move(m);
      have_best = true;
    }
  }
  return best;
}

double fit_score(const Tensor3& t, const CpModel& model) {
  check_shapes(t, model);
  const double norm_t = tensor::frob_norm(t);
  require(norm_t > 0.0, ErrorCategory::kInvalidArgument, "fit is undefined for a zero-norm tensor");
  double resid;
  if (t.size() <= kDirectFitLimit) {
    resid = direct_residual_norm(t, model);
  } else {
    resid = gram_residual_norm(norm_t, tensor::mttkrp(t, model.a, model.b, 3), model);
  }
  return 1.0 - resid / norm_t;
}

Congruence congruence_detail(const CpModel& m1, const CpModel& m2) {
  require(m1.rank() == m2.rank(), ErrorCategory::kDimensionMismatch,
          "congruence: rank mismatch (" + std::to_string(m1.rank()) + " vs " + std::to_string(m2.rank()) + ")");
  require(m1.dims() == m2.dims(), ErrorCategory::kDimensionMismatch, "congruence: dims mismatch");
  const std::size_t rank = m1.rank();
  Congruence out;
  out.match.assign(rank, 0);
  if (rank == 0) return out;

  std::vector<std::array<double, 3>> cosines(rank * rank);
  for (std::size_t r = 0; r < rank; ++r)
    for (std::size_t s = 0; s < rank; ++s)
      cosines[r * rank + s] = {std::abs(cosine(m1.a, r, m2.a, s)), std::abs(cosine(m1.b, r, m2.b, s)),
                               std::abs(cosine(m1.c, r, m2.c, s))};

  std::vector<bool> used1(rank, false), used2(rank, false);
  double total = 0.0;
  for (std::size_t step = 0; step < rank; ++step) {
    double best = -1.0;
    std::size_t br = 0, bs = 0;
    for (std::size_t r = 0; r < rank; ++r) {
      if (used1[r]) continue;
      for (std::size_t s = 0; s < rank; ++s) {
        if (used2[s]) continue;
        const auto& c = cosines[r * rank + s];
        const double score = c[0] * c[1] * c[2];
        if (score > best) {
          best = score;
          br = r;
          bs = s;
        }
      }
    }
    used1[br] = used2[bs] = true;
    out.match[br] = bs;
    total += best;
    for (int mode = 0; mode < 3; ++mode) out.per_mode[mode] += cosines[br * rank + bs][mode];
  }
  out.score = total / static_cast<double>(rank);
  for (double& v : out.per_mode) v /= static_cast<double>(rank);
  return out;
}

double congruence(const CpModel& m1, const CpModel& m2) { return congruence_detail(m1, m2).score; }

FactorReport factor_report(const CpModel& model, std::size_t component) {
  require(component >= 1 && component <= model.rank(), ErrorCategory::kInvalidArgument,
          "component " + std::to_string(component) + " out of range 1.." + std::to_string(model.rank()));
  const std::size_t r = component - 1;
  FactorReport rep;
  rep.component = component;
  rep.weight = model.weights[r];
  auto series = [&](const Matrix& f, int mode) {
    const auto& labels = model.labels[mode];
    std::vector<LabeledLoading> out;
    out.reserve(f.rows());
    for (std::size_t n = 0; n < f.rows(); ++n)
      out.push_back({n < labels.size() ? labels[n] : std::to_string(n), f(n, r)});
    return out;
  };
  rep.vehicle = series(model.a, 0);
  rep.system = series(model.b, 1);
  rep.time = series(model.c, 2);
  return rep;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<FactorReport>& reports) {
  out << "component,mode,label,loading\n";
  for (const auto& rep : reports) {
    out << rep.component << ",weight,lambda," << detail::exact(rep.weight) << '\n';
    const std::pair<const char*, const std::vector<LabeledLoading>*> modes[] = {
        {"vehicle", &rep.vehicle}, {"system", &rep.system}, {"time", &rep.time}};
    for (const auto& [name, series] : modes)
      for (const auto& item : *series)
        out << rep.component << ',' << name << ',' << csv_field(item.label) << ',' << detail::exact(item.loading)
            << '\n';
  }
}

void write_report_svg(std::ostream& out, const FactorReport& rep) {
  constexpr double kWidth = 900.0;
  constexpr double kPanelHeight = 200.0;
  constexpr double kLeft = 60.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 40.0;
  constexpr double kGap = 70.0;
  const double total_height = kTop + 3 * (kPanelHeight + kGap);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << total_height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">Component " << rep.component
      << " (weight " << detail::fixed(rep.weight, 4) << ")</text>\n";

  const std::pair<const char*, const std::vector<LabeledLoading>*> panels[] = {
      {"vehicle", &rep.vehicle}, {"system", &rep.system}, {"time", &rep.time}};
  double y0 = kTop;
  for (const auto& [name, series] : panels) {
    double lo = 0.0, hi = 0.0;
    for (const auto& item : *series) {
      lo = std::min(lo, item.loading);
      hi = std::max(hi, item.loading);
    }
    if (hi - lo <= 0.0) hi = lo + 1.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double bar_w = series->empty() ? 0.0 : plot_w / static_cast<double>(series->size());
    auto ypos = [&](double v) { return y0 + kPanelHeight * (hi - v) / (hi - lo); };
    const double zero_y = ypos(0.0);

    out << "<g class=\"panel\" id=\"" << name << "\">\n";
    out << "<text x=\"5\" y=\"" << detail::fixed(y0 + 12.0, 2) << "\" font-size=\"12\">" << name << "</text>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << detail::fixed(zero_y, 2) << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << detail::fixed(zero_y, 2) << "\" stroke=\"black\"/>\n";
    for (std::size_t n = 0; n < series->size(); ++n) {
      const auto& item = (*series)[n];
      const double x = kLeft + bar_w * static_cast<double>(n);
      const double y = std::min(ypos(item.loading), zero_y);
      const double h = std::abs(ypos(item.loading) - zero_y);
      out << "<rect x=\"" << detail::fixed(x, 2) << "\" y=\"" << detail::fixed(y, 2) << "\" width=\""
          << detail::fixed(std::max(bar_w * 0.8, 0.5), 2) << "\" height=\"" << detail::fixed(h, 2)
          << "\" fill=\"steelblue\"><title>" << xml_escape(item.label) << ": " << detail::fixed(item.loading, 4)
          << "</title></rect>\n";
    }
    // Tick labels, thinned so that at most ~40 are drawn per panel.
    const std::size_t stride = std::max<std::size_t>(1, (series->size() + 39) / 40);
    for (std::size_t n = 0; n < series->size(); n += stride) {
      const double x = kLeft + bar_w * (static_cast<double>(n) + 0.4);
      const double y = y0 + kPanelHeight + 8.0;
      out << "<text x=\"" << detail::fixed(x, 2) << "\" y=\"" << detail::fixed(y, 2) << "\" transform=\"rotate(45 "
          << detail::fixed(x, 2) << ' ' << detail::fixed(y, 2) << ")\">" << xml_escape((*series)[n].label)
          << "</text>\n";
    }
    out << "</g>\n";
    y0 += kPanelHeight + kGap;
  }
  out << "</svg>\n";
}

void write_model(std::ostream& out, const CpModel& m) {
  const auto d = m.dims();
  out << "FLEETMX-CPMODEL 1\n";
  out << "dims " << d.i << ' ' << d.j << ' ' << d.k << '\n';
  out << "rank " << m.rank() << '\n';
  out << "fit " << detail::exact(m.fit) << '\n';
  out << "iterations " << m.iterations << '\n';
  out << "converged " << (m.converged ? 1 : 0) << '\n';
  out << "weights";
  for (double w : m.weights) out << ' ' << detail::exact(w);
  out << '\n';
  const std::pair<const char*, const Matrix*> factors[] = {{"a", &m.a}, {"b", &m.b}, {"c", &m.c}};
  for (const auto& [name, f] : factors) {
    out << "factor " << name << '\n';
    for (std::size_t r = 0; r < f->rows(); ++r) {
      for (std::size_t c = 0; c < f->cols(); ++c) out << (c ? " " : "") << detail::exact((*f)(r, c));
      out << '\n';
    }
  }
  for (int mode = 0; mode < 3; ++mode) {
    out << "axis " << mode + 1 << '\n';
    for (std::size_t n = 0; n < d[mode + 1]; ++n)
      out << (n < m.labels[mode].size() ? m.labels[mode][n] : std::to_string(n)) << '\n';
  }
  out << "trace " << m.fit_trace.size();
  for (double f : m.fit_trace) out << ' ' << detail::exact(f);
  out << '\n';
  out << "warnings " << m.warnings.size() << '\n';
  for (const auto& w : m.warnings) out << w << '\n';
}

CpModel read_model(std::istream& in) {
  auto bad = [](const std::string& what) { fail(ErrorCategory::kParse, "model file: " + what); };
  std::string line;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) bad("unexpected end of file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return std::istringstream(line);
  };
  auto expect_key = [&](std::istringstream& ss, const char* key) {
    std::string k;
    if (!(ss >> k) || k != key) bad(std::string("expected '") + key + "'");
  };
  auto read_double = [&](std::istringstream& ss) {
    std::string tok;
    if (!(ss >> tok)) bad("missing number");
    auto v = detail::parse_double(tok);
    if (!v) bad("bad number '" + tok + "'");
    return *v;
  };

  if (next().str() != "FLEETMX-CPMODEL 1") bad("missing header 'FLEETMX-CPMODEL 1'");
  tensor::Dims d;
  std::size_t rank = 0;
  CpModel m;
  {
    auto ss = next();
    expect_key(ss, "dims");
    if (!(ss >> d.i >> d.j >> d.k)) bad("malformed dims");
  }
  {
    auto ss = next();
    expect_key(ss, "rank");
    if (!(ss >> rank)) bad("malformed rank");
  }
  {
    auto ss = next();
    expect_key(ss, "fit");
    m.fit = read_double(ss);
  }
  {
    auto ss = next();
    expect_key(ss, "iterations");
    if (!(ss >> m.iterations)) bad("malformed iterations");
  }
  {
    auto ss = next();
    expect_key(ss, "converged");
    int flag = 0;
    if (!(ss >> flag)) bad("malformed converged flag");
    m.converged = flag != 0;
  }
  {
    auto ss = next();
    expect_key(ss, "weights");
    for (std::size_t r = 0; r < rank; ++r) m.weights.push_back(read_double(ss));
  }
  const std::pair<const char*, Matrix*> factors[] = {{"a", &m.a}, {"b", &m.b}, {"c", &m.c}};
  const std::size_t rows[] = {d.i, d.j, d.k};
  for (int n = 0; n < 3; ++n) {
    auto ss = next();
    expect_key(ss, "factor");
    std::string name;
    if (!(ss >> name) || name != factors[n].first) bad("expected factor " + std::string(factors[n].first));
    Matrix f(rows[n], rank);
    for (std::size_t r = 0; r < rows[n]; ++r) {
      auto row = next();
      for (std::size_t c = 0; c < rank; ++c) f(r, c) = read_double(row);
    }
    *factors[n].second = std::move(f);
  }
  for (int mode = 0; mode < 3; ++mode) {
    if (next().str() != "axis " + std::to_string(mode + 1)) bad("expected axis " + std::to_string(mode + 1));
    for (std::size_t n = 0; n < rows[mode]; ++n) {
      next();
      m.labels[mode].push_back(line);
    }
  }
  {
    auto ss = next();
    expect_key(ss, "trace");
    std::size_t n = 0;
    if (!(ss >> n)) bad("malformed trace");
    for (std::size_t t = 0; t < n; ++t) m.fit_trace.push_back(read_double(ss));
  }
  {
    auto ss = next();
    expect_key(ss, "warnings");
    std::size_t n = 0;
    if (!(ss >> n)) bad("malformed warnings count");
    for (std::size_t t = 0; t < n; ++t) {
      next();
      m.warnings.push_back(line);
    }
  }
  return m;
}

void save_model(const std::string& path, const CpModel& model) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot open '" + path + "' for writing");
  write_model(out, model);
  require(static_cast<bool>(out), ErrorCategory::kIo, "failed writing '" + path + "'");
}

CpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open '" + path + "'");
  return read_model(in);
}

}  // namespace fleetmx::cp
