#include "umps/sampling.hpp"

#include "umps/errors.hpp"
#include "umps/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>

namespace umps {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Model gauged for right-to-left sampling plus the left environments
// env[j] = sum over the allowed prefixes of sites 0..j-1 of L L^T, where the
// allowed bits are the evidence on known sites and both values elsewhere.
// Before the first known site the prefix is left-canonical and env[j] = I.
struct Prepared {
  Mps mps;
  std::vector<int> fixed;  // -1 for unknown, else the known bit
  std::vector<Matrix> env;
  std::vector<bool> identity;
  std::array<std::vector<Matrix>, 2> slices;
};

Prepared prepare(const Mps &model, const Evidence &known) {
  const std::size_t d = model.length();
  if (d == 0) throw ShapeError("sampling: empty model");
  Prepared p;
  p.mps = model.gauge() == Gauge::center(d - 1) ? model : canonicalize(model, d - 1);
  const double z = p.mps.core(d - 1).slice(0).squaredNorm() +
                   p.mps.core(d - 1).slice(1).squaredNorm();
  if (!std::isfinite(z) || std::abs(z - 1.0) > kUnitTol)
    throw UnnormalizedModelError("model has Z = " + std::to_string(z) +
                                 "; sampling needs |Z - 1| <= 1e-6");

  p.fixed.assign(d, -1);
  for (const auto &[site, bit] : known) {
    if (site >= d)
      throw ShapeError("evidence site " + std::to_string(site + 1) + " outside 1.." +
                       std::to_string(d));
    if (bit > 1) throw ShapeError("evidence bits must be 0 or 1");
    p.fixed[site] = bit;
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::uint8_t v = 0; v < 2; ++v) p.slices[v].push_back(p.mps.core(j).slice(v));

  const std::size_t first_known = known.empty() ? d : known.begin()->first;
  p.env.resize(d + 1);
  p.identity.assign(d + 1, false);
  for (std::size_t j = 0; j <= d; ++j) {
    const auto b = static_cast<Eigen::Index>(j < d ? p.mps.core(j).r_left() : 1);
    if (j <= first_known && j < d) {
      p.env[j] = Matrix::Identity(b, b);
      p.identity[j] = true;
      continue;
    }
    Matrix e = Matrix::Zero(b, b);
    for (std::uint8_t v = 0; v < 2; ++v) {
      if (p.fixed[j - 1] >= 0 && p.fixed[j - 1] != v) continue;
      const Matrix &a = p.slices[v][j - 1];
      e.noalias() += a.transpose() * p.env[j - 1] * a;
    }
    p.env[j] = std::move(e);
  }
  if (!known.empty()) {
    const double evidence = p.env[d](0, 0);
    if (!(evidence >= 1e-300))
      throw ImpossibleEvidenceError("the known pixels have probability " +
                                    std::to_string(evidence) + " under the model");
  }
  return p;
}

BitString draw(const Prepared &p, std::mt19937_64 &rng) {
  const std::size_t d = p.mps.length();
  BitString out(d);
  Vector s = Vector::Ones(1);
  Vector w[2];
  for (std::size_t k = d; k-- > 0;) {
    if (p.fixed[k] >= 0) {
      out[k] = static_cast<std::uint8_t>(p.fixed[k]);
      s = p.slices[out[k]][k] * s;
    } else {
      double prob[2];
      for (std::uint8_t v = 0; v < 2; ++v) {
        w[v].noalias() = p.slices[v][k] * s;
        prob[v] = p.identity[k] ? w[v].squaredNorm() : w[v].dot(p.env[k] * w[v]);
      }
      const double total = prob[0] + prob[1];
      if (!(total > 0.0) || !std::isfinite(total))
        throw ImpossibleEvidenceError("conditional probabilities vanished at site " +
                                      std::to_string(k + 1));
      const double u = uniform01(rng);
      const std::uint8_t bit = (prob[0] > 0.0 && u <= prob[0] / total) ? 0 : 1;
      out[k] = bit;
      s = std::move(w[bit]);
    }
    // Only ratios matter from here on; rescaling keeps s away from underflow.
    const double norm = s.norm();
    if (norm > 0.0) s /= norm;
  }
  return out;
}

}  // namespace

std::mt19937_64 sample_stream(std::uint64_t seed, std::size_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index)));
}

double uniform01(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<BitString> sample(const Mps &mps, const SampleRequest &req,
                              ExecPolicy policy) {
  if (req.count < 1) throw ShapeError("sample count must be >= 1");
  const bool mirrored = req.order == SampleOrder::LeftToRight;
  const std::size_t d = mps.length();

  Evidence ev;
  for (const auto &[site, bit] : req.condition) {
    if (site >= d)
      throw ShapeError("evidence site " + std::to_string(site + 1) + " outside 1.." +
                       std::to_string(d));
    ev[mirrored ? d - 1 - site : site] = bit;
  }
  const Prepared p = prepare(mirrored ? reversed(mps) : mps, ev);

  std::vector<BitString> out(req.count);
  const auto n = static_cast<std::ptrdiff_t>(req.count);
  if (policy == ExecPolicy::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      auto rng = sample_stream(req.seed, req.first_index + static_cast<std::size_t>(i));
      out[i] = draw(p, rng);
    }
  } else {
    // Exceptions may not cross the parallel region; the first failing index
    // is rethrown afterwards.
    std::vector<std::exception_ptr> errors(req.count);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        auto rng = sample_stream(req.seed, req.first_index + static_cast<std::size_t>(i));
        out[i] = draw(p, rng);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto &e : errors)
      if (e) std::rethrow_exception(e);
  }
  if (mirrored)
    for (auto &bits : out) std::reverse(bits.begin(), bits.end());
  return out;
}

double marginal(const Mps &mps, std::span<const std::uint8_t> suffix) {
  const std::size_t d = mps.length();
  if (suffix.size() > d) throw ShapeError("marginal: suffix longer than the model");
  if (suffix.empty()) return partition_function(mps);
  const std::size_t k = d - suffix.size();
  const Gauge &g = mps.gauge();
  const bool prefix_left = k == 0 || (g.kind != GaugeKind::None && g.site >= k);
  if (!prefix_left)
    throw GaugeError("marginal: cores before site " + std::to_string(k + 1) +
                     " are not known to be left-canonical");
  Vector s = Vector::Ones(1);
  for (std::size_t j = d; j-- > k;) {
    const std::uint8_t bit = suffix[j - k];
    if (bit > 1) throw ShapeError("marginal: non-binary symbol");
    s = mps.core(j).slice(bit) * s;
  }
  return s.squaredNorm();
}

BitString reconstruct(const Mps &mps, const Evidence &known, std::uint64_t seed,
                      SampleOrder order, std::size_t index) {
  SampleRequest req;
  req.first_index = index;
  req.count = 1;
  req.seed = seed;
  req.condition = known;
  req.order = order;
  return sample(mps, req, ExecPolicy::Serial).front();
}

}  // namespace umps
