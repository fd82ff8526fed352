#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fleetmx::tensor {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) noexcept { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const noexcept { return data_.data() + r * cols_; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
/// aᵀa.
Matrix gram(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);

struct Dims {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  std::size_t size() const noexcept { return i * j * k; }
  std::size_t operator[](int mode) const;
  bool operator==(const Dims&) const = default;
};

/// Linear offset of element (i, j, k). Every kernel goes through this so the
/// layout (i slowest, k fastest) is defined in exactly one place.
constexpr std::size_t offset(const Dims& d, std::size_t i, std::size_t j, std::size_t k) noexcept {
  return (i * d.j + j) * d.k + k;
}

using AxisLabels = std::array<std::vector<std::string>, 3>;

/// Dense 3-mode tensor with one label per index along each axis.
class Tensor3 {
 public:
  Tensor3() = default;
  /// Zero tensor with index labels "0", "1", ...
  explicit Tensor3(Dims dims);
  Tensor3(Dims dims, std::vector<double> data);
  Tensor3(Dims dims, std::vector<double> data, AxisLabels labels);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[offset(dims_, i, j, k)];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[offset(dims_, i, j, k)];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  const AxisLabels& labels() const noexcept { return labels_; }
  const std::vector<std::string>& labels(int mode) const;
  void set_labels(int mode, std::vector<std::string> labels);

  bool operator==(const Tensor3&) const = default;

 private:
  Dims dims_;
  std::vector<double> data_;
  AxisLabels labels_;
};

/// Mode-n matricization (mode in {1,2,3}). The remaining two indices are
/// merged with the earlier mode varying fastest:
///   mode 1: I × (J·K), column j + k·J
///   mode 2: J × (I·K), column i + k·I
///   mode 3: K × (I·J), column i + j·I
Matrix unfold(const Tensor3& t, int mode);

/// Inverse of unfold; labels default to indices.
Tensor3 fold(const Matrix& m, int mode, const Dims& dims);

/// Columnwise Kronecker product; row index of the result is ra·b.rows + rb.
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// unfold(t, mode) · khatri_rao(late, early) without forming the product.
/// f1 and f2 are the factors of the two other modes in ascending mode order.
Matrix mttkrp(const Tensor3& t, const Matrix& f1, const Matrix& f2, int mode);

/// Σ_r λ_r a_r ∘ b_r ∘ c_r.
Tensor3 reconstruct(const Matrix& a, const Matrix& b, const Matrix& c,
                    std::span<const double> weights);

double frob_norm(const Tensor3& t);
double frob_norm(const Matrix& m);

/// ‖Σ_r λ_r a_r ∘ b_r ∘ c_r‖² from factor Gram matrices.
double kruskal_norm_squared(const Matrix& a, const Matrix& b, const Matrix& c,
                            std::span<const double> weights);

// Text format:
//   FLEETMX-TENSOR 1
//   dims <I> <J> <K>
//   axis 1
//   <I label lines>
//   axis 2
//   <J label lines>
//   axis 3
//   <K label lines>
//   values
//   <I·J·K values in layout order, one k-fiber per line>
void write_tensor(std::ostream& out, const Tensor3& t);
Tensor3 read_tensor(std::istream& in);
void save_tensor(const std::string& path, const Tensor3& t);
Tensor3 load_tensor(const std::string& path);

}  // namespace fleetmx::tensor
