#include "umps/tensor.hpp"

#include "umps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace umps {
namespace {

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

void require_positive(const std::vector<std::size_t> &dims) {
  if (dims.empty()) throw ShapeError("tensor must have at least one mode");
  for (std::size_t n : dims)
    if (n == 0) throw ShapeError("tensor extents must be positive");
}

void require_same_dims(const DenseTensor &a, const DenseTensor &b) {
  if (a.dims() != b.dims()) throw ShapeError("tensor dims mismatch");
}

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)) {
  require_positive(dims_);
  data_.assign(product(dims_), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  require_positive(dims_);
  if (product(dims_) != data_.size())
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match product of dims " +
                     std::to_string(product(dims_)));
  if (!all_finite()) throw NonFiniteError("tensor data has non-finite entries");
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size())
    throw ShapeError("index order does not match tensor order");
  std::size_t off = 0;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (index[m] >= dims_[m]) throw ShapeError("tensor index out of range");
    off = off * dims_[m] + index[m];
  }
  return off;
}

bool DenseTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

DenseTensor &DenseTensor::operator*=(double c) {
  for (double &x : data_) x *= c;
  return *this;
}

DenseTensor &DenseTensor::operator+=(const DenseTensor &other) {
  require_same_dims(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseTensor &DenseTensor::operator-=(const DenseTensor &other) {
  require_same_dims(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseTensor operator*(double c, DenseTensor t) { return t *= c; }
DenseTensor operator+(DenseTensor a, const DenseTensor &b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor &b) { return a -= b; }

Matrix unfold(const DenseTensor &t, std::size_t k) {
  if (k < 1 || k >= t.order())
    throw ShapeError("unfold: mode split k=" + std::to_string(k) +
                     " outside [1, " + std::to_string(t.order()) + ")");
  const auto dims = std::span<const std::size_t>(t.dims());
  const std::size_t rows = product(dims.first(k));
  const std::size_t cols = product(dims.subspan(k));
  return RowMajorMap(t.data().data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
}

DenseTensor fold(const Matrix &m, std::vector<std::size_t> dims, std::size_t k) {
  if (k < 1 || k >= dims.size())
    throw ShapeError("fold: mode split k out of range");
  const auto span = std::span<const std::size_t>(dims);
  const auto rows = static_cast<Eigen::Index>(product(span.first(k)));
  const auto cols = static_cast<Eigen::Index>(product(span.subspan(k)));
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", dims require " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  std::vector<double> data(static_cast<std::size_t>(rows * cols));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::RowMajor>>(data.data(), rows, cols) = m;
  return DenseTensor(std::move(dims), std::move(data));
}

double inner(const DenseTensor &a, const DenseTensor &b) {
  require_same_dims(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

double frobenius_norm(const DenseTensor &t) { return std::sqrt(inner(t, t)); }

Matrix SvdResult::reconstruct() const {
  return u * s.asDiagonal() * v.transpose();
}

SvdResult svd(const Matrix &m, double rank_tol,
              std::optional<std::size_t> max_rank) {
  if (!m.allFinite()) throw NonFiniteError("svd: input has non-finite entries");
  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &sv = dec.singularValues();
  std::size_t rank = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    const double cutoff = rank_tol * sv(0);
    while (rank < static_cast<std::size_t>(sv.size()) &&
           sv(static_cast<Eigen::Index>(rank)) > cutoff)
      ++rank;
  }
  if (max_rank) rank = std::min(rank, *max_rank);
  const auto r = static_cast<Eigen::Index>(rank);
  return SvdResult{dec.matrixU().leftCols(r), sv.head(r),
                   dec.matrixV().leftCols(r), rank};
}

}  // namespace umps
