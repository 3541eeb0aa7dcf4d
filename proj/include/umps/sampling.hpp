#pragma once

#include "umps/kernels.hpp"
#include "umps/mps.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace umps {

/// RightToLeft draws v_d first from a left-canonical prefix; LeftToRight is
/// the mirrored scheme on a right-canonical suffix.
enum class SampleOrder { RightToLeft, LeftToRight };

/// Known pixels: 0-based site -> bit.
using Evidence = std::map<std::size_t, std::uint8_t>;

struct SampleRequest {
  std::size_t count = 1;
  std::uint64_t seed = 0;
  Evidence condition;
  SampleOrder order = SampleOrder::RightToLeft;
  /// Draw i uses PRNG stream first_index + i.
  std::size_t first_index = 0;
};

/// PRNG used by the sampler: std::mt19937_64 seeded per request index with a
/// splitmix64 mix of (seed, index). Sample i of a request therefore does not
/// depend on how many samples are drawn or on the thread count.
std::mt19937_64 sample_stream(std::uint64_t seed, std::size_t index);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(std::mt19937_64 &rng);

/// Exact draws from the Born distribution (conditioned on `req.condition`
/// when non-empty). Per step, the two conditional probabilities are
/// renormalized by their sum; bit 0 is chosen when u < p_0.
/// Throws UnnormalizedModelError when |Z - 1| > 1e-6 and
/// ImpossibleEvidenceError when the evidence has probability zero.
std::vector<BitString> sample(const Mps &mps, const SampleRequest &req,
                              ExecPolicy policy = ExecPolicy::Parallel);

/// ||A^(k)(v_k) ... A^(d-1)(v_{d-1})||_F^2 for suffix = (v_k, ..., v_{d-1}),
/// k = d - suffix.size(). Equals the marginal P(v_k..v_{d-1}) when cores
/// 0..k-1 are left-canonical; throws GaugeError when the gauge does not
/// vouch for that. The empty suffix returns Z.
double marginal(const Mps &mps, std::span<const std::uint8_t> suffix);

/// One completion of the unknown sites drawn from P(unknown | known) using
/// PRNG stream `index`. With no evidence the result equals draw `index` of
/// sample(mps, {count, seed}).
BitString reconstruct(const Mps &mps, const Evidence &known, std::uint64_t seed,
                      SampleOrder order = SampleOrder::RightToLeft,
                      std::size_t index = 0);

}  // namespace umps
