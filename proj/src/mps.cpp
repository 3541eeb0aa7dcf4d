#include "umps/mps.hpp"

#include "umps/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

namespace umps {
namespace {

// Debug builds re-verify the canonical residuals the gauge metadata claims.
constexpr double kGaugeAssertTol = 1e-8;

struct ThinQr {
  Matrix q;
  Matrix r;
};

ThinQr thin_qr(const Matrix &m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  const Eigen::Index k = std::min(m.rows(), m.cols());
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return {std::move(q), std::move(r)};
}

std::size_t capped_pow2(std::size_t e, std::size_t cap) {
  if (e >= 63) return cap;
  return std::min<std::size_t>(std::size_t{1} << e, cap);
}

MpsCore core_from_left_matrix(const Matrix &m, std::size_t r_left,
                              std::size_t r_right) {
  return MpsCore(fold(m, {r_left, kPhysDim, r_right}, 2));
}

MpsCore core_from_right_matrix(const Matrix &m, std::size_t r_left,
                               std::size_t r_right) {
  return MpsCore(fold(m, {r_left, kPhysDim, r_right}, 1));
}

// Left-orthogonalize core k, pushing the R factor into core k+1.
void left_step(std::vector<MpsCore> &cores, std::size_t k) {
  const MpsCore &a = cores[k];
  ThinQr qr = thin_qr(unfold(a.tensor(), 2));
  const auto q = static_cast<std::size_t>(qr.q.cols());
  const std::size_t r_left = a.r_left();
  Matrix next = qr.r * unfold(cores[k + 1].tensor(), 1);
  const std::size_t next_right = cores[k + 1].r_right();
  cores[k] = core_from_left_matrix(qr.q, r_left, q);
  cores[k + 1] = core_from_right_matrix(next, q, next_right);
}

// Right-orthogonalize core k, pushing the R^T factor into core k-1.
void right_step(std::vector<MpsCore> &cores, std::size_t k) {
  const MpsCore &a = cores[k];
  ThinQr qr = thin_qr(unfold(a.tensor(), 1).transpose());
  const auto q = static_cast<std::size_t>(qr.q.cols());
  const std::size_t r_right = a.r_right();
  Matrix prev = unfold(cores[k - 1].tensor(), 2) * qr.r.transpose();
  const std::size_t prev_left = cores[k - 1].r_left();
  cores[k] = core_from_right_matrix(qr.q.transpose(), q, r_right);
  cores[k - 1] = core_from_left_matrix(prev, prev_left, q);
}

void debug_check_gauge([[maybe_unused]] const Mps &mps) {
  assert(gauge_residual(mps) <= kGaugeAssertTol);
}

}  // namespace

// ---------------------------------------------------------------- MpsCore

MpsCore::MpsCore(DenseTensor t) : t_(std::move(t)) {
  if (t_.order() != 3 || t_.dims()[1] != kPhysDim)
    throw ShapeError("MPS core must have shape r_left x 2 x r_right");
}

MpsCore::MpsCore(std::size_t r_left, std::size_t r_right)
    : MpsCore(DenseTensor({r_left, kPhysDim, r_right})) {}

Matrix MpsCore::slice(std::uint8_t v) const {
  if (v >= kPhysDim) throw ShapeError("physical index must be 0 or 1");
  const auto rl = static_cast<Eigen::Index>(r_left());
  const auto rr = static_cast<Eigen::Index>(r_right());
  Matrix s(rl, rr);
  for (Eigen::Index a = 0; a < rl; ++a)
    for (Eigen::Index b = 0; b < rr; ++b)
      s(a, b) = (*this)(static_cast<std::size_t>(a), v, static_cast<std::size_t>(b));
  return s;
}

// ------------------------------------------------------------------ Gauge

bool Gauge::allows_two_site(std::size_t k) const noexcept {
  switch (kind) {
    case GaugeKind::Center: return site == k || site == k + 1;
    case GaugeKind::TwoSiteCenter: return site == k;
    case GaugeKind::None: return false;
  }
  return false;
}

// -------------------------------------------------------------------- Mps

Mps::Mps(std::vector<MpsCore> cores, Gauge gauge)
    : cores_(std::move(cores)), gauge_(gauge) {
  if (cores_.empty()) throw ShapeError("MPS must have at least one core");
  if (cores_.front().r_left() != 1 || cores_.back().r_right() != 1)
    throw ShapeError("boundary bond dimensions must be 1");
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
    if (cores_[k].r_right() != cores_[k + 1].r_left())
      throw ShapeError("bond mismatch between cores " + std::to_string(k) +
                       " and " + std::to_string(k + 1));
  const std::size_t d = cores_.size();
  if ((gauge_.kind == GaugeKind::Center && gauge_.site >= d) ||
      (gauge_.kind == GaugeKind::TwoSiteCenter && gauge_.site + 1 >= d))
    throw ShapeError("gauge center outside the chain");
}

std::vector<std::size_t> Mps::bond_dims() const {
  std::vector<std::size_t> r;
  r.reserve(cores_.size());
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
    r.push_back(cores_[k].r_right());
  return r;
}

double Mps::r_mean() const {
  const auto r = bond_dims();
  if (r.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t x : r) sum += static_cast<double>(x);
  return sum / static_cast<double>(r.size());
}

std::size_t Mps::r_max() const {
  const auto r = bond_dims();
  return r.empty() ? 1 : *std::max_element(r.begin(), r.end());
}

// -------------------------------------------------------------- operations

Mps random_init(std::size_t d, std::size_t r_max, std::uint64_t seed) {
  if (d < 2) throw ShapeError("random_init requires d >= 2");
  if (r_max < 1) throw ShapeError("random_init requires r_max >= 1");

  std::vector<std::size_t> bond(d + 1, 1);
  for (std::size_t k = 1; k < d; ++k)
    bond[k] = std::min(capped_pow2(k, r_max), capped_pow2(d - k, r_max));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MpsCore> cores;
  cores.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    DenseTensor t({bond[k], kPhysDim, bond[k + 1]});
    for (double &x : t.data()) x = normal(rng);
    cores.emplace_back(std::move(t));
  }

  // The pushed R factors compound the norm; rescaling each step keeps long
  // chains finite and changes nothing after the final normalization.
  for (std::size_t k = d - 1; k >= 1; --k) {
    right_step(cores, k);
    cores[k - 1].tensor() *= 1.0 / frobenius_norm(cores[k - 1].tensor());
  }

  Mps mps(std::move(cores), Gauge::center(0));
  debug_check_gauge(mps);
  return mps;
}

double check_canonical(const MpsCore &core, CanonicalSide side) {
  if (side == CanonicalSide::Left) {
    const Matrix m = unfold(core.tensor(), 2);
    const Matrix gram = m.transpose() * m;
    return (gram - Matrix::Identity(gram.rows(), gram.cols())).norm();
  }
  const Matrix m = unfold(core.tensor(), 1);
  const Matrix gram = m * m.transpose();
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).norm();
}

double gauge_residual(const Mps &mps) {
  const Gauge g = mps.gauge();
  if (g.kind == GaugeKind::None) return 0.0;
  const std::size_t first_right = g.kind == GaugeKind::Center ? g.site + 1 : g.site + 2;
  double worst = 0.0;
  for (std::size_t k = 0; k < g.site; ++k)
    worst = std::max(worst, check_canonical(mps.core(k), CanonicalSide::Left));
  for (std::size_t k = first_right; k < mps.length(); ++k)
    worst = std::max(worst, check_canonical(mps.core(k), CanonicalSide::Right));
  return worst;
}

Mps canonicalize(Mps mps, std::size_t center) {
  const std::size_t d = mps.length();
  if (center >= d) throw ShapeError("canonicalize: center outside the chain");
  const Gauge g = mps.gauge();

  // [lo, hi] is the stretch of cores not covered by the current gauge.
  std::size_t lo = 0;
  std::size_t hi = d - 1;
  if (g.kind == GaugeKind::Center) {
    lo = hi = g.site;
  } else if (g.kind == GaugeKind::TwoSiteCenter) {
    lo = g.site;
    hi = g.site + 1;
  }

  std::vector<MpsCore> cores = std::move(mps).take_cores();
  for (std::size_t k = lo; k < center; ++k) left_step(cores, k);
  for (std::size_t k = hi; k > center; --k) right_step(cores, k);

  Mps out(std::move(cores), Gauge::center(center));
  debug_check_gauge(out);
  return out;
}

MergedCore merge(const Mps &mps, std::size_t k) {
  if (k + 1 >= mps.length())
    throw ShapeError("merge: window (" + std::to_string(k) + ", " +
                     std::to_string(k + 1) + ") outside the chain");
  const MpsCore &a = mps.core(k);
  const MpsCore &b = mps.core(k + 1);
  const Matrix m = unfold(a.tensor(), 2) * unfold(b.tensor(), 1);
  return {k, fold(m, {a.r_left(), kPhysDim, kPhysDim, b.r_right()}, 2)};
}

Mps split(Mps mps, const MergedCore &merged, SplitDirection direction,
          const SplitOptions &options) {
  const std::size_t k = merged.site;
  if (k + 1 >= mps.length()) throw ShapeError("split: window outside the chain");
  if (!mps.gauge().allows_two_site(k))
    throw GaugeError("split: gauge is not centered on window (" +
                     std::to_string(k) + ", " + std::to_string(k + 1) + ")");
  const std::size_t r_left = mps.core(k).r_left();
  const std::size_t r_right = mps.core(k + 1).r_right();
  const auto &dims = merged.tensor.dims();
  if (dims.size() != 4 || dims[0] != r_left || dims[1] != kPhysDim ||
      dims[2] != kPhysDim || dims[3] != r_right)
    throw ShapeError("split: merged tensor shape does not fit the window");

  SvdResult dec = svd(merged.matrix(), options.rank_tol, options.max_rank);
  if (dec.rank == 0) throw StepError("split: two-site tensor is zero");
  if (options.renormalize) dec.s /= dec.s.norm();

  Matrix left;
  Matrix right;
  Gauge gauge;
  if (direction == SplitDirection::Rightward) {
    left = std::move(dec.u);
    right = dec.s.asDiagonal() * dec.v.transpose();
    gauge = Gauge::center(k + 1);
  } else {
    left = dec.u * dec.s.asDiagonal();
    right = dec.v.transpose();
    gauge = Gauge::center(k);
  }

  std::vector<MpsCore> cores = std::move(mps).take_cores();
  cores[k] = core_from_left_matrix(left, r_left, dec.rank);
  cores[k + 1] = core_from_right_matrix(right, dec.rank, r_right);
  Mps out(std::move(cores), gauge);
  debug_check_gauge(out);
  return out;
}

Mps with_core(Mps mps, std::size_t k, MpsCore core, Gauge gauge) {
  std::vector<MpsCore> cores = std::move(mps).take_cores();
  if (k >= cores.size()) throw ShapeError("with_core: site outside the chain");
  cores[k] = std::move(core);
  return Mps(std::move(cores), gauge);
}

double amplitude(const Mps &mps, std::span<const std::uint8_t> v) {
  if (v.size() != mps.length())
    throw ShapeError("amplitude: string length " + std::to_string(v.size()) +
                     " does not match chain length " +
                     std::to_string(mps.length()));
  std::vector<double> w{1.0};
  std::vector<double> next;
  for (std::size_t k = 0; k < mps.length(); ++k) {
    if (v[k] > 1) throw ShapeError("amplitude: non-binary symbol");
    const MpsCore &a = mps.core(k);
    const std::size_t rr = a.r_right();
    next.assign(rr, 0.0);
    const double *base = a.tensor().data().data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double *row = base + (i * kPhysDim + v[k]) * rr;
      for (std::size_t j = 0; j < rr; ++j) next[j] += w[i] * row[j];
    }
    w.swap(next);
  }
  return w[0];
}

double partition_function(const Mps &mps) {
  const Gauge g = mps.gauge();
  switch (g.kind) {
    case GaugeKind::Center: {
      const double n = frobenius_norm(mps.core(g.site).tensor());
      return n * n;
    }
    case GaugeKind::TwoSiteCenter: {
      const double n = frobenius_norm(merge(mps, g.site).tensor);
      return n * n;
    }
    case GaugeKind::None: break;
  }
  const Mps gauged = canonicalize(mps, 0);
  const double n = frobenius_norm(gauged.core(0).tensor());
  return n * n;
}

Mps reversed(const Mps &mps) {
  const std::size_t d = mps.length();
  std::vector<MpsCore> cores;
  cores.reserve(d);
  for (std::size_t k = d; k-- > 0;) {
    const MpsCore &a = mps.core(k);
    MpsCore t(a.r_right(), a.r_left());
    double *out = t.tensor().data().data();
    for (std::size_t i = 0; i < a.r_left(); ++i)
      for (std::size_t v = 0; v < kPhysDim; ++v)
        for (std::size_t j = 0; j < a.r_right(); ++j)
          out[(j * kPhysDim + v) * a.r_left() + i] = a(i, v, j);
    cores.push_back(std::move(t));
  }
  Gauge g = mps.gauge();
  if (g.kind == GaugeKind::Center) g.site = d - 1 - g.site;
  if (g.kind == GaugeKind::TwoSiteCenter) g.site = d - 2 - g.site;
  return Mps(std::move(cores), g);
}

}  // namespace umps
