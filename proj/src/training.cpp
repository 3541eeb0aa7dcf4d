#include "umps/training.hpp"

#include "umps/errors.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace umps {
namespace {

void check_data(const Mps &mps, const BinaryDataset &data) {
  if (data.entries.empty()) throw ShapeError("dataset is empty");
  if (data.d != mps.length())
    throw ShapeError("dataset strings have length " + std::to_string(data.d) +
                     " but the model has " + std::to_string(mps.length()) + " sites");
}

std::vector<std::vector<std::uint8_t>> transpose_bits(const BinaryDataset &data) {
  std::vector<std::vector<std::uint8_t>> out(data.d,
                                             std::vector<std::uint8_t>(data.size()));
  for (std::size_t s = 0; s < data.size(); ++s)
    for (std::size_t j = 0; j < data.d; ++j) out[j][s] = data.entries[s][j];
  return out;
}

Matrix ones_env(std::size_t n) {
  return Matrix::Ones(1, static_cast<Eigen::Index>(n));
}

const char *dir_name(SplitDirection d) {
  return d == SplitDirection::Rightward ? "R" : "L";
}

enum class Trainer { Riemannian, Baseline };

std::string context(std::size_t loop, std::size_t site) {
  return "loop " + std::to_string(loop) + ", site " + std::to_string(site + 1) + ": ";
}

MergedCore riemannian_update(const MergedCore &merged, const Matrix &grad,
                             const TrainConfig &cfg) {
  const Matrix x = merged.matrix();
  const auto r = std::min<std::size_t>(
      {cfg.r_max, static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols())});
  const MhPoint p = lift(x, r);
  const TangentRep t = riemannian_grad(p, grad, cfg.omega);
  const MhPoint next = retract(p, t, cfg.theta);
  return {merged.site, fold(next.x(), merged.tensor.dims(), 2)};
}

MergedCore baseline_update(const MergedCore &merged, const DenseTensor &grad,
                           const TrainConfig &cfg) {
  DenseTensor t = merged.tensor - cfg.theta * grad;
  const double norm = frobenius_norm(t);
  if (!(norm > 1e-300) || !std::isfinite(norm))
    throw StepError("projected step vanished or diverged; step too large");
  t *= 1.0 / norm;
  return {merged.site, std::move(t)};
}

FitResult fit(const Mps &init, const BinaryDataset &data, const TrainConfig &cfg,
              const UpdateObserver &on_update, Trainer trainer) {
  cfg.validate();
  if (init.length() < 2) throw ShapeError("training needs at least two sites");
  check_data(init, data);
  if (init.r_max() > cfg.r_max)
    throw ShapeError("initial bond dimension " + std::to_string(init.r_max()) +
                     " exceeds r_max = " + std::to_string(cfg.r_max));

  Mps mps = init.gauge().allows_two_site(0) ? init : canonicalize(init, 0);
  const double z0 = partition_function(mps);
  if (std::abs(z0 - 1.0) > kUnitTol)
    throw UnnormalizedModelError("initial model has Z = " + std::to_string(z0) +
                                 "; training needs a unit-norm model");

  const auto start = std::chrono::steady_clock::now();
  const auto schedule = sweep_schedule(mps.length());
  const GradForm form =
      trainer == Trainer::Riemannian ? GradForm::Unitary : GradForm::Normalized;
  SplitOptions split_opts;
  if (trainer == Trainer::Baseline) {
    split_opts.max_rank = cfg.r_max;
    split_opts.renormalize = true;
  }

  EnvCache cache = EnvCache::build(mps, data, 0, cfg.policy);
  FitResult result;
  std::size_t update = 0;
  const std::size_t total_updates = cfg.l_max * schedule.size();
  double prev_loop_nll = std::nan("");
  double last_nll = std::nan("");

  for (std::size_t loop = 1; loop <= cfg.l_max; ++loop) {
    for (const auto &[k, dir] : schedule) {
      try {
        if (cache.site() != k) cache = advance_env(std::move(cache), mps, k, cfg.policy);
        const MergedCore merged = merge(mps, k);
        const SiteGradient g = site_gradient(cache, merged, form, cfg.policy);
        if (std::isnan(prev_loop_nll)) prev_loop_nll = g.nll;

        const MergedCore updated =
            trainer == Trainer::Riemannian
                ? riemannian_update(merged, unfold(g.grad, 2), cfg)
                : baseline_update(merged, g.grad, cfg);
        mps = split(std::move(mps), updated, dir, split_opts);

        const MergedCore after = merge(mps, k);
        const double z = inner(after.tensor, after.tensor);
        last_nll = window_nll(cache, after, cfg.policy);
        ++update;

        if (on_update)
          on_update(UpdateEvent{loop, k, dir, &mps, g.nll, last_nll, z});
        if (update % cfg.log_every == 0 || update == total_updates) {
          const double elapsed =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
          result.trace.rows.push_back(
              TraceRow{loop, k, dir, last_nll, elapsed, mps.r_mean(), mps.r_max(), z});
        }
      } catch (const SingularSampleError &e) {
        throw SingularSampleError(e.sample(), context(loop, k) + e.what());
      } catch (const StepError &e) {
        throw StepError(context(loop, k) + e.what());
      } catch (const GaugeError &e) {
        throw GaugeError(context(loop, k) + e.what());
      }
    }
    result.loops_run = loop;
    const bool converged =
        cfg.stop_tol > 0.0 && std::abs(prev_loop_nll - last_nll) < cfg.stop_tol;
    prev_loop_nll = last_nll;
    if (converged) break;
  }
  // A run cut short by early stopping still ends with a trace row.
  if (!result.trace.rows.empty() && update % cfg.log_every != 0) {
    const auto &[k, dir] = schedule.back();
    const MergedCore after = merge(mps, k);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.trace.rows.push_back(TraceRow{result.loops_run, k, dir, last_nll, elapsed,
                                         mps.r_mean(), mps.r_max(),
                                         inner(after.tensor, after.tensor)});
  }
  result.final_nll = last_nll;
  result.model = std::move(mps);
  return result;
}

}  // namespace

double nll(const Mps &mps, const BinaryDataset &data, NllForm form, ExecPolicy policy) {
  check_data(mps, data);
  const double z = partition_function(mps);
  if (form == NllForm::Unitary && std::abs(z - 1.0) > kUnitTol)
    throw UnnormalizedModelError("model has Z = " + std::to_string(z) +
                                 "; the unitary NLL needs |Z - 1| <= 1e-6");
  const auto bits = transpose_bits(data);
  Matrix env = ones_env(data.size());
  for (std::size_t j = 0; j < mps.length(); ++j)
    env = extend_left(env, mps.core(j), bits[j], policy);
  double sum = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double psi = env(0, static_cast<Eigen::Index>(s));
    if (!(std::abs(psi) >= kPsiFloor))
      throw SingularSampleError(s, "sample " + std::to_string(s) +
                                       " has zero amplitude (|psi| < 1e-300)");
    sum += std::log(psi * psi);
  }
  const double value = -sum / static_cast<double>(data.size());
  return form == NllForm::Normalized ? value + std::log(z) : value;
}

// ------------------------------------------------------------------ EnvCache

EnvCache EnvCache::build(const Mps &mps, const BinaryDataset &data, std::size_t k,
                         ExecPolicy policy) {
  check_data(mps, data);
  const std::size_t d = mps.length();
  if (d < 2 || k + 1 >= d)
    throw ShapeError("EnvCache: window (" + std::to_string(k) + ", " +
                     std::to_string(k + 1) + ") out of range");
  EnvCache c;
  c.k_ = k;
  c.n_ = data.size();
  c.bits_ = transpose_bits(data);
  c.left_.assign(d + 1, Matrix());
  c.right_.assign(d + 1, Matrix());
  c.left_[0] = ones_env(c.n_);
  for (std::size_t j = 0; j < k; ++j)
    c.left_[j + 1] = extend_left(c.left_[j], mps.core(j), c.bits_[j], policy);
  c.right_[d] = ones_env(c.n_);
  for (std::size_t j = d; j-- > k + 2;)
    c.right_[j] = extend_right(c.right_[j + 1], mps.core(j), c.bits_[j], policy);
  return c;
}

EnvCache advance_env(EnvCache cache, const Mps &mps, std::size_t new_k,
                     ExecPolicy policy) {
  const std::size_t k = cache.k_;
  if (mps.length() != cache.length())
    throw ShapeError("advance_env: model length does not match the cache");
  if (new_k + 1 >= mps.length())
    throw ShapeError("advance_env: window out of range");
  if (new_k == k + 1) {
    cache.left_[k + 1] = extend_left(cache.left_[k], mps.core(k), cache.bits_[k], policy);
    cache.right_[k + 2] = Matrix();
    cache.dir_ = SplitDirection::Rightward;
  } else if (new_k + 1 == k) {
    cache.right_[k + 1] =
        extend_right(cache.right_[k + 2], mps.core(k + 1), cache.bits_[k + 1], policy);
    cache.left_[k] = Matrix();
    cache.dir_ = SplitDirection::Leftward;
  } else {
    throw ShapeError("advance_env: non-adjacent jump from window " +
                     std::to_string(k) + " to " + std::to_string(new_k));
  }
  cache.k_ = new_k;
  return cache;
}

// ----------------------------------------------------------------- gradient

SiteGradient site_gradient(const EnvCache &cache, const MergedCore &merged,
                           GradForm form, ExecPolicy policy) {
  if (merged.site != cache.site())
    throw ShapeError("site_gradient: merged core is at site " +
                     std::to_string(merged.site) + ", cache window at " +
                     std::to_string(cache.site()));
  const double z = inner(merged.tensor, merged.tensor);
  if (form == GradForm::Unitary && std::abs(z - 1.0) > kUnitTol)
    throw UnnormalizedModelError("merged core has ||A||^2 = " + std::to_string(z) +
                                 "; the unitary gradient needs |Z - 1| <= 1e-6");

  const std::size_t k = merged.site;
  const WindowStats st = window_stats(cache.left(), cache.right(), merged.tensor,
                                      cache.bits(k), cache.bits(k + 1), true, policy);
  const double n = static_cast<double>(cache.samples());

  // Z' term: 2A (unit norm) or 2A / Z.
  DenseTensor grad = (form == GradForm::Unitary ? 2.0 : 2.0 / z) * merged.tensor;
  const std::size_t rl = merged.tensor.dims()[0];
  const std::size_t rr = merged.tensor.dims()[3];
  auto g = grad.data();
  for (std::size_t a = 0; a < rl; ++a)
    for (std::size_t xy = 0; xy < 4; ++xy)
      for (std::size_t b = 0; b < rr; ++b)
        g[(a * 4 + xy) * rr + b] -=
            2.0 / n *
            st.blocks[xy](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));

  return {std::move(grad), -st.sum_log_psi2 / n + std::log(z), z};
}

DenseTensor euclidean_grad(const EnvCache &cache, const MergedCore &merged,
                           GradForm form, ExecPolicy policy) {
  return site_gradient(cache, merged, form, policy).grad;
}

double window_nll(const EnvCache &cache, const MergedCore &merged, ExecPolicy policy) {
  if (merged.site != cache.site())
    throw ShapeError("window_nll: merged core does not match the cache window");
  const std::size_t k = merged.site;
  const WindowStats st = window_stats(cache.left(), cache.right(), merged.tensor,
                                      cache.bits(k), cache.bits(k + 1), false, policy);
  const double z = inner(merged.tensor, merged.tensor);
  return -st.sum_log_psi2 / static_cast<double>(cache.samples()) + std::log(z);
}

// ------------------------------------------------------------------ config

void TrainConfig::validate() const {
  if (r_max < 1) throw ShapeError("r_max must be >= 1");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ShapeError("theta must be > 0");
  if (l_max < 1) throw ShapeError("l_max must be >= 1");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ShapeError("omega must be > 0");
  if (log_every < 1) throw ShapeError("log_every must be >= 1");
  if (!(stop_tol >= 0.0)) throw ShapeError("stop_tol must be >= 0");
}

void TrainTrace::write_csv(std::ostream &out) const {
  out << "loop,site,dir,nll,elapsed_s,r_mean,r_max,z\n";
  const auto old_prec = out.precision(17);
  for (const auto &r : rows)
    out << r.loop << ',' << r.site + 1 << ',' << dir_name(r.dir) << ',' << r.nll << ','
        << r.elapsed_s << ',' << r.r_mean << ',' << r.r_max << ',' << r.z << '\n';
  out.precision(old_prec);
}

// ------------------------------------------------------------------ sweeps

std::vector<std::pair<std::size_t, SplitDirection>> sweep_schedule(std::size_t d) {
  if (d < 2) throw ShapeError("sweep_schedule: d must be >= 2");
  std::vector<std::pair<std::size_t, SplitDirection>> out;
  for (std::size_t k = 0; k + 2 < d; ++k) out.emplace_back(k, SplitDirection::Rightward);
  out.emplace_back(d - 2, SplitDirection::Leftward);
  for (std::size_t k = d - 2; k-- > 0;) out.emplace_back(k, SplitDirection::Leftward);
  return out;
}

FitResult umps_sd_fit(const Mps &init, const BinaryDataset &data,
                      const TrainConfig &config, const UpdateObserver &on_update) {
  return fit(init, data, config, on_update, Trainer::Riemannian);
}

FitResult baseline_gd_fit(const Mps &init, const BinaryDataset &data,
                          const TrainConfig &config, const UpdateObserver &on_update) {
  return fit(init, data, config, on_update, Trainer::Baseline);
}

}  // namespace umps
