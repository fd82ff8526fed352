#include "fleetmx/tensor.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fleetmx/error.hpp"

namespace fleetmx::tensor {

namespace {

void check_mode(int mode) {
  require(mode >= 1 && mode <= 3, ErrorCategory::kInvalidArgument,
          "mode must be 1, 2 or 3 (got " + std::to_string(mode) + ")");
}

std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

std::string dims_string(const Dims& d) {
  return std::to_string(d.i) + "x" + std::to_string(d.j) + "x" + std::to_string(d.k);
}

// Row index within the unfolding and column index for element (i, j, k).
struct UnfoldIndex {
  std::size_t row;
  std::size_t col;
};

UnfoldIndex unfold_index(const Dims& d, int mode, std::size_t i, std::size_t j, std::size_t k) {
  switch (mode) {
    case 1: return {i, j + k * d.j};
    case 2: return {j, i + k * d.i};
    default: return {k, i + j * d.i};
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, ErrorCategory::kDimensionMismatch,
          "matrix data length " + std::to_string(data_.size()) + " != " +
              std::to_string(rows_) + "x" + std::to_string(cols_));
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  require(values.size() == rows_, ErrorCategory::kDimensionMismatch, "column length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorCategory::kDimensionMismatch, "matmul inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double v = a(i, p);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(p, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix gram(const Matrix& a) {
  const std::size_t n = a.cols();
  Matrix out(n, n);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t p = 0; p < n; ++p) {
      const double v = a(r, p);
      for (std::size_t q = 0; q < n; ++q) out(p, q) += v * a(r, q);
    }
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCategory::kDimensionMismatch,
          "hadamard shape mismatch");
  Matrix out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t n = 0; n < dst.size(); ++n) dst[n] *= src[n];
  return out;
}

std::size_t Dims::operator[](int mode) const {
  check_mode(mode);
  return mode == 1 ? i : (mode == 2 ? j : k);
}

Tensor3::Tensor3(Dims dims) : Tensor3(dims, std::vector<double>(dims.size(), 0.0)) {}

Tensor3::Tensor3(Dims dims, std::vector<double> data)
    : Tensor3(dims, std::move(data), {index_labels(dims.i), index_labels(dims.j), index_labels(dims.k)}) {}

Tensor3::Tensor3(Dims dims, std::vector<double> data, AxisLabels labels)
    : dims_(dims), data_(std::move(data)), labels_(std::move(labels)) {
  require(data_.size() == dims_.size(), ErrorCategory::kDimensionMismatch,
          "tensor data length " + std::to_string(data_.size()) + " != " + dims_string(dims_));
  for (int m = 1; m <= 3; ++m) {
    require(labels_[m - 1].size() == dims_[m], ErrorCategory::kDimensionMismatch,
            "axis " + std::to_string(m) + " has " + std::to_string(labels_[m - 1].size()) +
                " labels for dimension " + std::to_string(dims_[m]));
  }
}

const std::vector<std::string>& Tensor3::labels(int mode) const {
  check_mode(mode);
  return labels_[mode - 1];
}

void Tensor3::set_labels(int mode, std::vector<std::string> labels) {
  check_mode(mode);
  require(labels.size() == dims_[mode], ErrorCategory::kDimensionMismatch, "label count mismatch");
  labels_[mode - 1] = std::move(labels);
}

Matrix unfold(const Tensor3& t, int mode) {
  check_mode(mode);
  const Dims& d = t.dims();
  const std::size_t rows = d[mode];
  Matrix out(rows, rows == 0 ? 0 : d.size() / rows);
  for (std::size_t i = 0; i < d.i; ++i)
    for (std::size_t j = 0; j < d.j; ++j)
      for (std::size_t k = 0; k < d.k; ++k) {
        const auto idx = unfold_index(d, mode, i, j, k);
        out(idx.row, idx.col) = t(i, j, k);
      }
  return out;
}

Tensor3 fold(const Matrix& m, int mode, const Dims& dims) {
  check_mode(mode);
  require(m.rows() == dims[mode] && m.rows() * m.cols() == dims.size(),
          ErrorCategory::kDimensionMismatch, "fold: matrix shape does not match " + dims_string(dims));
  Tensor3 out(dims);
  for (std::size_t i = 0; i < dims.i; ++i)
    for (std::size_t j = 0; j < dims.j; ++j)
      for (std::size_t k = 0; k < dims.k; ++k) {
        const auto idx = unfold_index(dims, mode, i, j, k);
        out(i, j, k) = m(idx.row, idx.col);
      }
  return out;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), ErrorCategory::kDimensionMismatch,
          "khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
              std::to_string(b.cols()) + ")");
  const std::size_t rank = a.cols();
  Matrix out(a.rows() * b.rows(), rank);
  for (std::size_t ra = 0; ra < a.rows(); ++ra)
    for (std::size_t rb = 0; rb < b.rows(); ++rb)
      for (std::size_t c = 0; c < rank; ++c) out(ra * b.rows() + rb, c) = a(ra, c) * b(rb, c);
  return out;
}

Matrix mttkrp(const Tensor3& t, const Matrix& f1, const Matrix& f2, int mode) {
  check_mode(mode);
  const Dims& d = t.dims();
  require(f1.cols() == f2.cols(), ErrorCategory::kDimensionMismatch, "mttkrp: factor ranks differ");
  const std::size_t rank = f1.cols();
  const std::size_t rows1 = mode == 1 ? d.j : d.i;
  const std::size_t rows2 = mode == 3 ? d.j : d.k;
  require(f1.rows() == rows1 && f2.rows() == rows2, ErrorCategory::kDimensionMismatch,
          "mttkrp: factor rows do not match tensor " + dims_string(d));

  Matrix out(d[mode], rank);
  std::vector<double> acc(rank);
  // Each output row is accumulated in a fixed (slice-major) order.
  switch (mode) {
    case 1:
      for (std::size_t i = 0; i < d.i; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < d.j; ++j) {
          for (std::size_t r = 0; r < rank; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < d.k; ++k) s += t(i, j, k) * f2(k, r);
            acc[r] += s * f1(j, r);
          }
        }
        for (std::size_t r = 0; r < rank; ++r) out(i, r) = acc[r];
      }
      break;
    case 2:
      for (std::size_t j = 0; j < d.j; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < d.i; ++i) {
          for (std::size_t r = 0; r < rank; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < d.k; ++k) s += t(i, j, k) * f2(k, r);
            acc[r] += s * f1(i, r);
          }
        }
        for (std::size_t r = 0; r < rank; ++r) out(j, r) = acc[r];
      }
      break;
    default:
      // Mode 3 walks k-fibers contiguously and scatters into the K rows.
      for (std::size_t i = 0; i < d.i; ++i)
        for (std::size_t j = 0; j < d.j; ++j)
          for (std::size_t r = 0; r < rank; ++r) {
            const double w = f1(i, r) * f2(j, r);
            if (w == 0.0) continue;
            for (std::size_t k = 0; k < d.k; ++k) out(k, r) += t(i, j, k) * w;
          }
      break;
  }
  return out;
}

Tensor3 reconstruct(const Matrix& a, const Matrix& b, const Matrix& c,
                    std::span<const double> weights) {
  const std::size_t rank = weights.size();
  require(a.cols() == rank && b.cols() == rank && c.cols() == rank,
          ErrorCategory::kDimensionMismatch, "reconstruct: factor ranks do not match weights");
  const Dims d{a.rows(), b.rows(), c.rows()};
  Tensor3 out(d);
  std::vector<double> ab(rank);
  for (std::size_t i = 0; i < d.i; ++i)
    for (std::size_t j = 0; j < d.j; ++j) {
      for (std::size_t r = 0; r < rank; ++r) ab[r] = weights[r] * a(i, r) * b(j, r);
      for (std::size_t k = 0; k < d.k; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < rank; ++r) s += ab[r] * c(k, r);
        out(i, j, k) = s;
      }
    }
  return out;
}

double frob_norm(const Tensor3& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

double frob_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double kruskal_norm_squared(const Matrix& a, const Matrix& b, const Matrix& c,
                            std::span<const double> weights) {
  const Matrix g = hadamard(hadamard(gram(a), gram(b)), gram(c));
  double s = 0.0;
  for (std::size_t r = 0; r < weights.size(); ++r)
    for (std::size_t q = 0; q < weights.size(); ++q) s += weights[r] * weights[q] * g(r, q);
  return s;
}

void write_tensor(std::ostream& out, const Tensor3& t) {
  const Dims& d = t.dims();
  out << "FLEETMX-TENSOR 1\n";
  out << "dims " << d.i << ' ' << d.j << ' ' << d.k << '\n';
  for (int m = 1; m <= 3; ++m) {
    out << "axis " << m << '\n';
    for (const auto& label : t.labels(m)) {
      require(label.find('\n') == std::string::npos && label.find('\r') == std::string::npos,
              ErrorCategory::kInvalidArgument, "tensor labels may not contain line breaks");
      out << label << '\n';
    }
  }
  out << "values\n";
  char buf[32];
  for (std::size_t i = 0; i < d.i; ++i)
    for (std::size_t j = 0; j < d.j; ++j) {
      for (std::size_t k = 0; k < d.k; ++k) {
        // Shortest representation that round-trips exactly.
        auto res = std::to_chars(buf, buf + sizeof(buf), t(i, j, k));
        if (k) out << ' ';
        out.write(buf, res.ptr - buf);
      }
      out << '\n';
    }
}

Tensor3 read_tensor(std::istream& in) {
  auto bad = [](const std::string& what) { fail(ErrorCategory::kParse, "tensor file: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != "FLEETMX-TENSOR 1") bad("missing header 'FLEETMX-TENSOR 1'");
  if (!std::getline(in, line)) bad("missing dims line");
  Dims d;
  {
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key >> d.i >> d.j >> d.k) || key != "dims") bad("malformed dims line");
    require(d.i > 0 && d.j > 0 && d.k > 0, ErrorCategory::kParse, "tensor file: dims must be positive");
  }
  AxisLabels labels;
  for (int m = 1; m <= 3; ++m) {
    if (!std::getline(in, line) || line != "axis " + std::to_string(m)) bad("expected 'axis " + std::to_string(m) + "'");
    for (std::size_t n = 0; n < d[m]; ++n) {
      if (!std::getline(in, line)) bad("truncated labels on axis " + std::to_string(m));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      labels[m - 1].push_back(line);
    }
  }
  if (!std::getline(in, line) || (line != "values" && line != "values\r")) bad("expected 'values'");
  std::vector<double> data;
  data.reserve(d.size());
  std::string token;
  while (in >> token) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) bad("bad value '" + token + "'");
    data.push_back(v);
  }
  if (data.size() != d.size())
    bad("expected " + std::to_string(d.size()) + " values, found " + std::to_string(data.size()));
  return Tensor3(d, std::move(data), std::move(labels));
}

void save_tensor(const std::string& path, const Tensor3& t) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot open '" + path + "' for writing");
  write_tensor(out, t);
  require(static_cast<bool>(out), ErrorCategory::kIo, "failed writing '" + path + "'");
}

Tensor3 load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open '" + path + "'");
  return read_tensor(in);
}

}  // namespace fleetmx::tensor
