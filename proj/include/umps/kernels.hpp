#pragma once

#include "umps/mps.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace umps {

/// Serial kernels are the reference implementation; the parallel ones split
/// the samples into fixed-size chunks and reduce the chunk results in chunk
/// order, so their output does not depend on the thread count.
enum class ExecPolicy { Serial, Parallel };

/// Samples per chunk in the parallel kernels.
inline constexpr std::size_t kSampleChunk = 64;

/// Environments are stored one column per sample.
///
/// extend_left:  out.col(s) = A(bits[s])^T env.col(s)   (r_left rows -> r_right)
/// extend_right: out.col(s) = A(bits[s])   env.col(s)   (r_right rows -> r_left)
Matrix extend_left(const Matrix &env, const MpsCore &core,
                   std::span<const std::uint8_t> bits, ExecPolicy policy);
Matrix extend_right(const Matrix &env, const MpsCore &core,
                    std::span<const std::uint8_t> bits, ExecPolicy policy);

/// Per-window sample statistics for the merged tensor of sites (k, k+1):
///   psi_s     = L_s^T A(x_s, y_s) R_s
///   blocks[2x+y] = sum over samples with (x_s, y_s) = (x, y) of L_s R_s^T / psi_s
///   sum_log_psi2 = sum_s ln psi_s^2
/// Blocks are only accumulated when `want_blocks` is set.
/// Throws SingularSampleError for the first sample with |psi| < 1e-300.
struct WindowStats {
  std::array<Matrix, 4> blocks;
  double sum_log_psi2 = 0.0;
};

WindowStats window_stats(const Matrix &left, const Matrix &right,
                         const DenseTensor &merged,
                         std::span<const std::uint8_t> bits_k,
                         std::span<const std::uint8_t> bits_k1, bool want_blocks,
                         ExecPolicy policy);

/// Smallest |psi| accepted before a sample is declared singular.
inline constexpr double kPsiFloor = 1e-300;

}  // namespace umps
