#include "umps/kernels.hpp"

#include "umps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace umps {
namespace {

constexpr std::size_t kNoSample = std::numeric_limits<std::size_t>::max();

void check_env(const Matrix &env, std::size_t rows, std::span<const std::uint8_t> bits,
               const char *what) {
  if (static_cast<std::size_t>(env.rows()) != rows ||
      static_cast<std::size_t>(env.cols()) != bits.size())
    throw ShapeError(std::string(what) + ": environment does not match core/bits");
}

std::array<Matrix, 4> merged_slices(const DenseTensor &merged) {
  const std::size_t rl = merged.dims()[0];
  const std::size_t rr = merged.dims()[3];
  std::array<Matrix, 4> out;
  for (std::size_t xy = 0; xy < 4; ++xy) {
    out[xy].resize(static_cast<Eigen::Index>(rl), static_cast<Eigen::Index>(rr));
    for (std::size_t a = 0; a < rl; ++a)
      for (std::size_t b = 0; b < rr; ++b)
        out[xy](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            merged.data()[(a * 4 + xy) * rr + b];
  }
  return out;
}

struct Partial {
  std::array<Matrix, 4> blocks;
  double sum_log = 0.0;
  std::size_t singular = kNoSample;
};

// Accumulates samples [begin, end) into `acc`, in sample order.
void accumulate(const Matrix &left, const Matrix &right,
                const std::array<Matrix, 4> &slices,
                std::span<const std::uint8_t> bits_k,
                std::span<const std::uint8_t> bits_k1, bool want_blocks,
                std::size_t begin, std::size_t end, Partial &acc) {
  Vector t(left.rows());
  for (std::size_t s = begin; s < end; ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    const std::size_t xy = 2 * bits_k[s] + bits_k1[s];
    t.noalias() = slices[xy] * right.col(col);
    const double psi = left.col(col).dot(t);
    if (!(std::abs(psi) >= kPsiFloor)) {
      acc.singular = std::min(acc.singular, s);
      continue;
    }
    acc.sum_log += std::log(psi * psi);
    if (want_blocks)
      acc.blocks[xy].noalias() += (left.col(col) / psi) * right.col(col).transpose();
  }
}

Partial make_partial(Eigen::Index rl, Eigen::Index rr, bool want_blocks) {
  Partial p;
  if (want_blocks)
    for (auto &b : p.blocks) b = Matrix::Zero(rl, rr);
  return p;
}

}  // namespace

Matrix extend_left(const Matrix &env, const MpsCore &core,
                   std::span<const std::uint8_t> bits, ExecPolicy policy) {
  check_env(env, core.r_left(), bits, "extend_left");
  const Matrix s0t = core.slice(0).transpose();
  const Matrix s1t = core.slice(1).transpose();
  const auto n = static_cast<std::ptrdiff_t>(bits.size());
  Matrix out(static_cast<Eigen::Index>(core.r_right()), env.cols());
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t s = 0; s < n; ++s)
      out.col(s).noalias() = (bits[s] ? s1t : s0t) * env.col(s);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s)
      out.col(s).noalias() = (bits[s] ? s1t : s0t) * env.col(s);
  }
  return out;
}

Matrix extend_right(const Matrix &env, const MpsCore &core,
                    std::span<const std::uint8_t> bits, ExecPolicy policy) {
  check_env(env, core.r_right(), bits, "extend_right");
  const Matrix s0 = core.slice(0);
  const Matrix s1 = core.slice(1);
  const auto n = static_cast<std::ptrdiff_t>(bits.size());
  Matrix out(static_cast<Eigen::Index>(core.r_left()), env.cols());
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t s = 0; s < n; ++s)
      out.col(s).noalias() = (bits[s] ? s1 : s0) * env.col(s);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s)
      out.col(s).noalias() = (bits[s] ? s1 : s0) * env.col(s);
  }
  return out;
}

WindowStats window_stats(const Matrix &left, const Matrix &right,
                         const DenseTensor &merged,
                         std::span<const std::uint8_t> bits_k,
                         std::span<const std::uint8_t> bits_k1, bool want_blocks,
                         ExecPolicy policy) {
  if (merged.order() != 4 || merged.dims()[1] != 2 || merged.dims()[2] != 2)
    throw ShapeError("window_stats: merged tensor must be r x 2 x 2 x r'");
  const std::size_t n = bits_k.size();
  if (bits_k1.size() != n || static_cast<std::size_t>(left.cols()) != n ||
      static_cast<std::size_t>(right.cols()) != n ||
      static_cast<std::size_t>(left.rows()) != merged.dims()[0] ||
      static_cast<std::size_t>(right.rows()) != merged.dims()[3])
    throw ShapeError("window_stats: environments do not match the merged tensor");

  const auto slices = merged_slices(merged);
  const Eigen::Index rl = left.rows();
  const Eigen::Index rr = right.rows();

  Partial total = make_partial(rl, rr, want_blocks);
  if (policy == ExecPolicy::Serial) {
    accumulate(left, right, slices, bits_k, bits_k1, want_blocks, 0, n, total);
  } else {
    const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
    std::vector<Partial> parts(chunks);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
      const auto cu = static_cast<std::size_t>(c);
      parts[cu] = make_partial(rl, rr, want_blocks);
      accumulate(left, right, slices, bits_k, bits_k1, want_blocks, cu * kSampleChunk,
                 std::min(n, (cu + 1) * kSampleChunk), parts[cu]);
    }
    for (const auto &p : parts) {
      total.sum_log += p.sum_log;
      total.singular = std::min(total.singular, p.singular);
      if (want_blocks)
        for (std::size_t xy = 0; xy < 4; ++xy) total.blocks[xy] += p.blocks[xy];
    }
  }
  if (total.singular != kNoSample)
    throw SingularSampleError(total.singular,
                              "sample " + std::to_string(total.singular) +
                                  " has zero amplitude (|psi| < 1e-300)");
  return {std::move(total.blocks), total.sum_log};
}

}  // namespace umps
