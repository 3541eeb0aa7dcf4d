#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace umps {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative singular-value cutoff used wherever a numerical rank is needed.
inline constexpr double kDefaultRankTol = 1e-12;

/// Dense real tensor of arbitrary order.
///
/// Storage is row-major over the multi-index (i_1, ..., i_d): the last index
/// varies fastest. This is the big-endian linearization, so the k-unfolding
/// of a tensor is a plain reshape of its flat data with the first k modes as
/// the row index and the remaining modes as the column index.
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero tensor with the given extents. Every extent must be positive.
  explicit DenseTensor(std::vector<std::size_t> dims);

  DenseTensor(std::vector<std::size_t> dims, std::vector<double> data);

  const std::vector<std::size_t> &dims() const noexcept { return dims_; }
  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Flat offset of a multi-index (0-based).
  std::size_t offset(std::span<const std::size_t> index) const;

  double operator()(std::initializer_list<std::size_t> index) const {
    return data_[offset({index.begin(), index.size()})];
  }
  double &operator()(std::initializer_list<std::size_t> index) {
    return data_[offset({index.begin(), index.size()})];
  }

  bool all_finite() const noexcept;

  DenseTensor &operator*=(double c);
  DenseTensor &operator+=(const DenseTensor &other);
  DenseTensor &operator-=(const DenseTensor &other);

  friend bool operator==(const DenseTensor &, const DenseTensor &) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

DenseTensor operator*(double c, DenseTensor t);
DenseTensor operator+(DenseTensor a, const DenseTensor &b);
DenseTensor operator-(DenseTensor a, const DenseTensor &b);

/// k-unfolding: rows index modes 1..k, columns modes k+1..d, both in
/// big-endian order. Requires 1 <= k < d.
Matrix unfold(const DenseTensor &t, std::size_t k);

/// Inverse of unfold(): reshapes `m` back into a tensor of extents `dims`.
DenseTensor fold(const Matrix &m, std::vector<std::size_t> dims, std::size_t k);

/// Frobenius inner product.
double inner(const DenseTensor &a, const DenseTensor &b);

double frobenius_norm(const DenseTensor &t);

struct SvdResult {
  Matrix u;  // rows x rank, orthonormal columns
  Vector s;  // rank values, nonincreasing, all > 0
  Matrix v;  // cols x rank, orthonormal columns
  std::size_t rank = 0;

  Matrix reconstruct() const;
};

/// Thin SVD truncated to the numerical rank: values <= rank_tol * s_max are
/// dropped, and at most `max_rank` of the largest values are kept.
SvdResult svd(const Matrix &m, double rank_tol = kDefaultRankTol,
              std::optional<std::size_t> max_rank = std::nullopt);

}  // namespace umps
