#pragma once

#include "umps/data.hpp"
#include "umps/kernels.hpp"
#include "umps/manifold.hpp"
#include "umps/mps.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace umps {

/// Unitary: -(1/|T|) sum ln Psi^2, requires |Z - 1| <= 1e-6.
/// Normalized: the unconstrained loss, -(1/|T|) sum ln Psi^2 + ln Z.
enum class NllForm { Unitary, Normalized };

/// Unitary: Z' - (2/|T|) sum Psi'/Psi with Z' = 2 A, valid when ||A||_F = 1.
/// Normalized: Z'/Z - (2/|T|) sum Psi'/Psi, the gradient of the
/// unconstrained loss at any norm.
enum class GradForm { Unitary, Normalized };

inline constexpr double kUnitTol = 1e-6;

double nll(const Mps &mps, const BinaryDataset &data, NllForm form = NllForm::Unitary,
           ExecPolicy policy = ExecPolicy::Parallel);

/// Per-sample left/right environments around the two-site window (k, k+1).
///
/// left(j), j <= k, holds prefix products A^(0)(v_0)...A^(j-1)(v_{j-1}) as a
/// b_j x |T| matrix (b_j the bond between sites j-1 and j, b_0 = 1); right(j),
/// j >= k+2, holds suffix products A^(j)(v_j)...A^(d-1)(v_{d-1}). Only the
/// entries in those ranges are valid.
class EnvCache {
 public:
  static EnvCache build(const Mps &mps, const BinaryDataset &data, std::size_t k,
                        ExecPolicy policy = ExecPolicy::Parallel);

  std::size_t site() const noexcept { return k_; }
  std::size_t length() const noexcept { return bits_.size(); }
  std::size_t samples() const noexcept { return n_; }
  SplitDirection direction() const noexcept { return dir_; }

  /// Environments adjacent to the window.
  const Matrix &left() const { return left_[k_]; }
  const Matrix &right() const { return right_[k_ + 2]; }
  std::span<const std::uint8_t> bits(std::size_t site) const { return bits_[site]; }

  friend EnvCache advance_env(EnvCache cache, const Mps &mps, std::size_t new_k,
                              ExecPolicy policy);

 private:
  std::size_t k_ = 0;
  std::size_t n_ = 0;
  SplitDirection dir_ = SplitDirection::Rightward;
  std::vector<std::vector<std::uint8_t>> bits_;  // bits_[site][sample]
  std::vector<Matrix> left_;
  std::vector<Matrix> right_;
};

/// Moves the window by one site. Moving right extends the left environment
/// with the (already updated) core k; moving left extends the right
/// environment with core k+1. Throws ShapeError for a non-adjacent jump.
EnvCache advance_env(EnvCache cache, const Mps &mps, std::size_t new_k,
                     ExecPolicy policy = ExecPolicy::Parallel);

/// Euclidean gradient of the loss with respect to the merged tensor, plus the
/// loss value at that tensor (same sample pass).
struct SiteGradient {
  DenseTensor grad;
  double nll = 0.0;  // normalized loss at `merged`
  double z = 0.0;    // ||merged||_F^2
};

SiteGradient site_gradient(const EnvCache &cache, const MergedCore &merged,
                           GradForm form = GradForm::Unitary,
                           ExecPolicy policy = ExecPolicy::Parallel);

DenseTensor euclidean_grad(const EnvCache &cache, const MergedCore &merged,
                           GradForm form = GradForm::Unitary,
                           ExecPolicy policy = ExecPolicy::Parallel);

/// Normalized loss of the model whose two-site window holds `merged`.
double window_nll(const EnvCache &cache, const MergedCore &merged,
                  ExecPolicy policy = ExecPolicy::Parallel);

struct TrainConfig {
  std::size_t r_max = 16;
  double theta = 0.05;
  std::size_t l_max = 10;
  double omega = kDefaultOmega;
  std::uint64_t seed = 0;
  std::size_t log_every = 1;
  /// Stop after a loop whose NLL moved by less than this (0 disables).
  double stop_tol = 1e-8;
  ExecPolicy policy = ExecPolicy::Parallel;

  /// Throws ShapeError when a field is out of range.
  void validate() const;
};

struct TraceRow {
  std::size_t loop = 0;  // 1-based
  std::size_t site = 0;  // 0-based left site of the window
  SplitDirection dir = SplitDirection::Rightward;
  double nll = 0.0;
  double elapsed_s = 0.0;
  double r_mean = 0.0;
  std::size_t r_max = 0;
  double z = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  /// CSV with header loop,site,dir,nll,elapsed_s,r_mean,r_max,z. Sites are
  /// written 1-based, dir as R or L.
  void write_csv(std::ostream &out) const;
};

/// Observer called after every two-site update.
struct UpdateEvent {
  std::size_t loop = 0;
  std::size_t site = 0;
  SplitDirection dir = SplitDirection::Rightward;
  const Mps *mps = nullptr;  // the model after the split
  double nll_before = 0.0;
  double nll_after = 0.0;
  double z = 0.0;
};
using UpdateObserver = std::function<void(const UpdateEvent &)>;

struct FitResult {
  Mps model;
  TrainTrace trace;
  std::size_t loops_run = 0;
  double final_nll = 0.0;
};

/// Visit order of one loop: (site, split direction) pairs. Sites 0..d-2 are
/// swept rightward, then d-3..0 leftward; the split at the turning site and
/// throughout the return pass is leftward. 2d-3 updates per loop.
std::vector<std::pair<std::size_t, SplitDirection>> sweep_schedule(std::size_t d);

/// Riemannian sweep: each site update lifts the merged core onto M_h,
/// retracts along the Riemannian gradient and splits without truncation
/// beyond rank_tol. Z stays 1 by construction.
FitResult umps_sd_fit(const Mps &init, const BinaryDataset &data,
                      const TrainConfig &config, const UpdateObserver &on_update = {});

/// Projected-gradient baseline: Euclidean step with the normalized gradient,
/// division by the Frobenius norm, truncated SVD split to r_max with the kept
/// singular values rescaled to unit norm.
FitResult baseline_gd_fit(const Mps &init, const BinaryDataset &data,
                          const TrainConfig &config,
                          const UpdateObserver &on_update = {});

}  // namespace umps
