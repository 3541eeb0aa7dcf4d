#pragma once

#include "umps/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace umps {

/// A configuration v in {0,1}^d, one byte per site.
using BitString = std::vector<std::uint8_t>;

/// Physical dimension of every site. The model is binary throughout.
inline constexpr std::size_t kPhysDim = 2;

/// Third-order core A^(k) of shape r_left x 2 x r_right.
class MpsCore {
 public:
  MpsCore() = default;
  explicit MpsCore(DenseTensor t);
  MpsCore(std::size_t r_left, std::size_t r_right);  // zero core

  std::size_t r_left() const noexcept { return t_.dims()[0]; }
  std::size_t r_right() const noexcept { return t_.dims()[2]; }

  const DenseTensor &tensor() const noexcept { return t_; }
  DenseTensor &tensor() noexcept { return t_; }

  /// Slice A(v) as an r_left x r_right matrix.
  Matrix slice(std::uint8_t v) const;

  double operator()(std::size_t a, std::size_t v, std::size_t b) const {
    return t_.data()[(a * kPhysDim + v) * r_right() + b];
  }

  friend bool operator==(const MpsCore &, const MpsCore &) = default;

 private:
  DenseTensor t_;
};

enum class GaugeKind : std::uint8_t { None = 0, Center = 1, TwoSiteCenter = 2 };

/// Which prefix of the chain is left-canonical and which suffix is
/// right-canonical. Sites are 0-based.
///   Center(k):        cores < k left-canonical, cores > k right-canonical.
///   TwoSiteCenter(k): cores < k left-canonical, cores > k+1 right-canonical.
struct Gauge {
  GaugeKind kind = GaugeKind::None;
  std::size_t site = 0;

  static Gauge none() { return {}; }
  static Gauge center(std::size_t k) { return {GaugeKind::Center, k}; }
  static Gauge two_site(std::size_t k) { return {GaugeKind::TwoSiteCenter, k}; }

  /// True when merging sites (k, k+1) yields a two-site orthogonality center.
  bool allows_two_site(std::size_t k) const noexcept;

  friend bool operator==(const Gauge &, const Gauge &) = default;
};

/// Open-boundary matrix product state with explicit gauge metadata.
class Mps {
 public:
  Mps() = default;
  Mps(std::vector<MpsCore> cores, Gauge gauge);

  std::size_t length() const noexcept { return cores_.size(); }
  const std::vector<MpsCore> &cores() const noexcept { return cores_; }
  const MpsCore &core(std::size_t k) const { return cores_.at(k); }
  const Gauge &gauge() const noexcept { return gauge_; }

  /// Bond dimensions r_1..r_{d-1} (the boundary bonds are always 1).
  std::vector<std::size_t> bond_dims() const;
  double r_mean() const;
  std::size_t r_max() const;

  friend bool operator==(const Mps &, const Mps &) = default;

  /// Moves the cores out; used by operations that rebuild a new Mps.
  std::vector<MpsCore> take_cores() && { return std::move(cores_); }

 private:
  std::vector<MpsCore> cores_;
  Gauge gauge_;
};

/// Two-site tensor A^(k,k+1) with shape r_{k-1} x 2 x 2 x r_{k+1}.
struct MergedCore {
  std::size_t site = 0;  // left site k of the window (0-based)
  DenseTensor tensor;

  /// 2-unfolding: (2 r_{k-1}) x (2 r_{k+1}).
  Matrix matrix() const { return unfold(tensor, 2); }
};

enum class CanonicalSide { Left, Right };
enum class SplitDirection { Rightward, Leftward };

struct SplitOptions {
  double rank_tol = kDefaultRankTol;
  std::size_t max_rank = static_cast<std::size_t>(-1);
  /// Rescale the retained singular values to unit norm after truncation.
  bool renormalize = false;
};

/// Random MPS with bond dims min(2^k, 2^{d-k}, r_max), cores 1..d-1
/// right-canonical, unit-norm first core, gauge Center(0).
Mps random_init(std::size_t d, std::size_t r_max, std::uint64_t seed);

/// ||sum_v A(v)^T A(v) - I||_F (left) or ||sum_v A(v) A(v)^T - I||_F (right).
double check_canonical(const MpsCore &core, CanonicalSide side);

/// Largest canonical residual over the cores the gauge metadata vouches for.
double gauge_residual(const Mps &mps);

/// QR sweeps moving the orthogonality center to `center`.
Mps canonicalize(Mps mps, std::size_t center);

/// Contract cores k and k+1 over their shared bond.
MergedCore merge(const Mps &mps, std::size_t k);

/// SVD split of an updated two-site tensor back into cores k and k+1.
/// Rightward leaves core k left-canonical and moves the center to k+1;
/// leftward leaves core k+1 right-canonical with the center at k.
Mps split(Mps mps, const MergedCore &merged, SplitDirection direction,
          const SplitOptions &options = {});

/// Replace one core and overwrite the gauge metadata.
Mps with_core(Mps mps, std::size_t k, MpsCore core, Gauge gauge);

/// Psi(v) = A^(1)(v_1) ... A^(d)(v_d).
double amplitude(const Mps &mps, std::span<const std::uint8_t> v);

/// Z = sum_v Psi(v)^2.
double partition_function(const Mps &mps);

/// The same state with site order reversed (cores transposed on their bonds).
Mps reversed(const Mps &mps);

}  // namespace umps
