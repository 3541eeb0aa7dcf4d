#include "oracles.hpp"
#include "umps/errors.hpp"
#include "umps/mps.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace umps;

namespace {

MpsCore scalar_core(double v0, double v1) { return MpsCore(DenseTensor({1, 2, 1}, {v0, v1})); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

BitString random_bits(std::size_t d, std::mt19937_64 &rng) {
  BitString b(d);
  for (auto &x : b) x = static_cast<std::uint8_t>(rng() & 1U);
  return b;
}

void expect_same_amplitudes(const Mps &a, const Mps &b, std::mt19937_64 &rng, int n = 50) {
  for (int i = 0; i < n; ++i) {
    const BitString v = random_bits(a.length(), rng);
    const double x = amplitude(a, v);
    const double y = amplitude(b, v);
    EXPECT_LE(std::abs(x - y), 1e-10 * std::max(std::abs(x), 1e-12));
  }
}

}  // namespace

TEST(RandomInit, TwoSitesRankOne) {
  const Mps m = random_init(2, 1, 3);
  ASSERT_EQ(m.length(), 2u);
  EXPECT_EQ(m.core(0).tensor().dims(), (std::vector<std::size_t>{1, 2, 1}));
  EXPECT_EQ(m.core(1).tensor().dims(), (std::vector<std::size_t>{1, 2, 1}));
  EXPECT_NEAR(partition_function(m), 1.0, 1e-12);
  EXPECT_NEAR(oracle::brute_z(m), 1.0, 1e-12);
}

TEST(RandomInit, RightCanonicalCoresAndBondCaps) {
  const Mps m = random_init(8, 4, 17);
  EXPECT_EQ(m.gauge(), Gauge::center(0));
  for (std::size_t k = 1; k < 8; ++k)
    EXPECT_LE(check_canonical(m.core(k), CanonicalSide::Right), 1e-10) << "core " << k;
  EXPECT_EQ(m.bond_dims(), (std::vector<std::size_t>{2, 4, 4, 4, 4, 4, 2}));
  EXPECT_NEAR(frobenius_norm(m.core(0).tensor()), 1.0, 1e-12);
}

TEST(RandomInit, BondsFollowPowerOfTwoEnvelope) {
  const Mps m = random_init(7, 100, 1);
  EXPECT_EQ(m.bond_dims(), (std::vector<std::size_t>{2, 4, 8, 8, 4, 2}));
}

TEST(RandomInit, DeterministicPerSeed) {
  EXPECT_EQ(random_init(6, 3, 42), random_init(6, 3, 42));
  EXPECT_NE(random_init(6, 3, 42), random_init(6, 3, 43));
}

TEST(RandomInit, RejectsBadArguments) {
  EXPECT_THROW(random_init(1, 2, 0), ShapeError);
  EXPECT_THROW(random_init(4, 0, 0), ShapeError);
}

TEST(CheckCanonical, OrthonormalColumnsPass) {
  std::mt19937_64 rng(5);
  const Matrix q = Eigen::HouseholderQR<Matrix>(oracle::random_matrix(6, 3, rng))
                       .householderQ() *
                   Matrix::Identity(6, 3);
  // Rows of the 1-unfolding of an r_l x 2 x r_r core are (a, v); columns b.
  const MpsCore core(fold(q, {3, 2, 3}, 2));
  EXPECT_LE(check_canonical(core, CanonicalSide::Left), 1e-12);
}

TEST(CheckCanonical, ZeroCoreResidualIsSqrtRank) {
  const MpsCore zero(3, 4);
  EXPECT_NEAR(check_canonical(zero, CanonicalSide::Left), 2.0, 1e-15);
  EXPECT_NEAR(check_canonical(zero, CanonicalSide::Right), std::sqrt(3.0), 1e-15);
}

TEST(Canonicalize, RandomMpsResiduals) {
  std::mt19937_64 rng(8);
  const Mps raw = oracle::random_raw_mps({1, 2, 4, 3, 4, 2, 1}, rng);
  const Mps c = canonicalize(raw, 2);
  EXPECT_EQ(c.gauge(), Gauge::center(2));
  for (std::size_t k = 0; k < 2; ++k)
    EXPECT_LE(check_canonical(c.core(k), CanonicalSide::Left), 1e-10);
  for (std::size_t k = 3; k < 6; ++k)
    EXPECT_LE(check_canonical(c.core(k), CanonicalSide::Right), 1e-10);
  expect_same_amplitudes(raw, c, rng);
}

TEST(Canonicalize, CenterNormEqualsBruteForceNorm) {
  std::mt19937_64 rng(9);
  const Mps raw = oracle::random_raw_mps({1, 2, 3, 4, 4, 4, 3, 2, 1}, rng);
  for (std::size_t center = 0; center < 8; ++center) {
    const Mps c = canonicalize(raw, center);
    EXPECT_LE(rel(frobenius_norm(c.core(center).tensor()), std::sqrt(oracle::brute_z(raw))),
              1e-10);
  }
}

TEST(Canonicalize, IdempotentOnCenteredState) {
  std::mt19937_64 rng(10);
  const Mps c = canonicalize(oracle::random_raw_mps({1, 2, 2, 2, 1}, rng), 1);
  const Mps again = canonicalize(c, 1);
  for (std::size_t i = 0; i < 16; ++i) {
    const BitString v = oracle::bits_of(i, 4);
    EXPECT_NEAR(amplitude(again, v), amplitude(c, v), 1e-14);
  }
}

TEST(Canonicalize, EveryCenterPreservesAmplitudes) {
  std::mt19937_64 rng(12);
  const Mps raw = oracle::random_raw_mps({1, 2, 4, 5, 4, 2, 1}, rng);
  for (std::size_t center = 0; center < 6; ++center)
    expect_same_amplitudes(raw, canonicalize(raw, center), rng);
}

TEST(Merge, ScalarCores) {
  const Mps m({scalar_core(2, 3), scalar_core(5, 7)}, Gauge::none());
  const MergedCore mc = merge(m, 0);
  EXPECT_EQ(mc.tensor.dims(), (std::vector<std::size_t>{1, 2, 2, 1}));
  EXPECT_EQ(std::vector<double>(mc.tensor.data().begin(), mc.tensor.data().end()),
            (std::vector<double>{10, 14, 15, 21}));
  EXPECT_EQ(mc.matrix().rows(), 2);
  EXPECT_EQ(mc.matrix().cols(), 2);
}

TEST(Merge, ExhaustiveAmplitudeThroughMergedCore) {
  std::mt19937_64 rng(13);
  const Mps m = oracle::random_raw_mps({1, 2, 3, 3, 2, 1}, rng);
  const MergedCore mc = merge(m, 2);
  const auto dense = oracle::dense_amplitudes(m);
  for (std::size_t i = 0; i < 32; ++i) {
    const BitString v = oracle::bits_of(i, 5);
    Matrix left = Matrix::Identity(1, 1);
    for (std::size_t j = 0; j < 2; ++j) left = left * m.core(j).slice(v[j]);
    Matrix right = Matrix::Identity(1, 1);
    for (std::size_t j = 5; j-- > 4;) right = m.core(j).slice(v[j]) * right;
    Matrix a(3, 2);
    for (std::size_t x = 0; x < 3; ++x)
      for (std::size_t y = 0; y < 2; ++y) a(x, y) = mc.tensor({x, v[2], v[3], y});
    const double psi = (left * a * right)(0, 0);
    EXPECT_NEAR(psi, dense[i], 1e-12 * std::max(1.0, std::abs(dense[i])));
  }
}

TEST(Merge, NormMatchesZAtTwoSiteCenter) {
  std::mt19937_64 rng(14);
  const Mps raw = oracle::random_raw_mps({1, 2, 4, 4, 2, 1}, rng);
  const Mps c = canonicalize(raw, 2);
  EXPECT_LE(rel(frobenius_norm(merge(c, 2).tensor), std::sqrt(oracle::brute_z(raw))), 1e-10);
  EXPECT_LE(rel(frobenius_norm(merge(c, 1).tensor), std::sqrt(oracle::brute_z(raw))), 1e-10);
}

TEST(Merge, RejectsOutOfRange) {
  const Mps m = random_init(4, 2, 0);
  EXPECT_THROW(merge(m, 3), ShapeError);
}

TEST(Split, RemergeReconstructsAndCanonicalSides) {
  std::mt19937_64 rng(15);
  const Mps c = canonicalize(oracle::random_raw_mps({1, 2, 4, 4, 2, 1}, rng), 2);
  const MergedCore mc = merge(c, 2);
  for (auto dir : {SplitDirection::Rightward, SplitDirection::Leftward}) {
    const Mps s = split(c, mc, dir);
    const MergedCore again = merge(s, 2);
    EXPECT_LE((again.matrix() - mc.matrix()).norm(), 1e-10 * mc.matrix().norm());
    if (dir == SplitDirection::Rightward) {
      EXPECT_EQ(s.gauge(), Gauge::center(3));
      EXPECT_LE(check_canonical(s.core(2), CanonicalSide::Left), 1e-10);
    } else {
      EXPECT_EQ(s.gauge(), Gauge::center(2));
      EXPECT_LE(check_canonical(s.core(3), CanonicalSide::Right), 1e-10);
    }
    EXPECT_LE(gauge_residual(s), 1e-10);
    expect_same_amplitudes(c, s, rng);
  }
}

TEST(Split, RequiresGaugeOnWindow) {
  std::mt19937_64 rng(16);
  const Mps c = canonicalize(oracle::random_raw_mps({1, 2, 4, 2, 1}, rng), 0);
  EXPECT_THROW(split(c, merge(c, 2), SplitDirection::Rightward), GaugeError);
  const Mps none = oracle::random_raw_mps({1, 2, 2, 1}, rng);
  EXPECT_THROW(split(none, merge(none, 0), SplitDirection::Rightward), GaugeError);
}

TEST(Split, TruncationRespectsMaxRank) {
  std::mt19937_64 rng(18);
  const Mps c = canonicalize(oracle::random_raw_mps({1, 2, 4, 4, 2, 1}, rng), 1);
  SplitOptions opt;
  opt.max_rank = 2;
  opt.renormalize = true;
  const Mps s = split(c, merge(c, 1), SplitDirection::Rightward, opt);
  EXPECT_EQ(s.bond_dims()[1], 2u);
  EXPECT_NEAR(partition_function(s), 1.0, 1e-12);
  EXPECT_NEAR(oracle::brute_z(s), 1.0, 1e-12);
}

TEST(Split, RankDeficientWindowShrinksBond) {
  // Product state: every bond has numerical rank 1 whatever the stored size.
  std::vector<MpsCore> cores;
  DenseTensor a({1, 2, 2}), b({2, 2, 1});
  a({0, 0, 0}) = 0.6;
  a({0, 1, 0}) = 0.8;
  b({0, 0, 0}) = 1.0;
  cores.emplace_back(a);
  cores.emplace_back(b);
  const Mps m(std::move(cores), Gauge::two_site(0));
  const Mps s = split(m, merge(m, 0), SplitDirection::Leftward);
  EXPECT_EQ(s.bond_dims(), (std::vector<std::size_t>{1}));
}

TEST(Amplitude, ScalarCoresAndErrors) {
  const Mps m({scalar_core(2, 3), scalar_core(5, 7)}, Gauge::none());
  EXPECT_EQ(amplitude(m, BitString{0, 0}), 10.0);
  EXPECT_EQ(amplitude(m, BitString{1, 1}), 21.0);
  EXPECT_THROW(amplitude(m, BitString{0}), ShapeError);
  EXPECT_THROW(amplitude(m, BitString{0, 2}), ShapeError);
}

TEST(Amplitude, MatchesDenseOracleD10) {
  std::mt19937_64 rng(19);
  const Mps m = oracle::random_raw_mps({1, 2, 3, 4, 4, 4, 4, 4, 3, 2, 1}, rng);
  const auto dense = oracle::dense_amplitudes(m);
  for (int i = 0; i < 20; ++i) {
    const BitString v = random_bits(10, rng);
    const double want = dense[oracle::index_of(v)];
    EXPECT_NEAR(amplitude(m, v), want, 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST(PartitionFunction, FreshInitIsOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    EXPECT_NEAR(partition_function(random_init(9, 5, seed)), 1.0, 1e-12);
}

TEST(PartitionFunction, MatchesEnumerationUpToD12) {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<std::size_t> bond(1, 4);
  for (std::size_t d = 2; d <= 12; ++d) {
    std::vector<std::size_t> bonds(d + 1, 1);
    for (std::size_t k = 1; k < d; ++k) bonds[k] = bond(rng);
    const Mps m = oracle::random_raw_mps(bonds, rng);
    EXPECT_LE(rel(partition_function(m), oracle::brute_z(m)), 1e-9) << "d=" << d;
    EXPECT_LE(rel(partition_function(canonicalize(m, d / 2)), oracle::brute_z(m)), 1e-9);
  }
}

TEST(PartitionFunction, ScalesQuadraticallyWithOneCore) {
  std::mt19937_64 rng(22);
  const Mps m = oracle::random_raw_mps({1, 2, 3, 2, 1}, rng);
  MpsCore scaled = m.core(1);
  scaled.tensor() *= 3.0;
  const Mps s = with_core(m, 1, scaled, Gauge::none());
  EXPECT_LE(rel(partition_function(s), 9.0 * partition_function(m)), 1e-12);
}

TEST(Mps, RejectsBondMismatchAndBadBoundary) {
  std::vector<MpsCore> bad{MpsCore(1, 2), MpsCore(3, 1)};
  EXPECT_THROW(Mps(bad, Gauge::none()), ShapeError);
  std::vector<MpsCore> edge{MpsCore(2, 1), MpsCore(1, 1)};
  EXPECT_THROW(Mps(edge, Gauge::none()), ShapeError);
  EXPECT_THROW(Mps({MpsCore(1, 1)}, Gauge::center(1)), ShapeError);
}

TEST(Mps, BondStatisticsMatchCoreShapes) {
  const Mps m = random_init(6, 3, 0);
  const auto bonds = m.bond_dims();
  std::size_t mx = 0;
  double sum = 0;
  for (std::size_t k = 0; k + 1 < m.length(); ++k) {
    EXPECT_EQ(bonds[k], m.core(k).r_right());
    mx = std::max(mx, m.core(k).r_right());
    sum += static_cast<double>(m.core(k).r_right());
  }
  EXPECT_EQ(m.r_max(), mx);
  EXPECT_DOUBLE_EQ(m.r_mean(), sum / 5.0);
}

TEST(Reversed, AmplitudesOfMirroredStrings) {
  std::mt19937_64 rng(23);
  const Mps m = oracle::random_raw_mps({1, 2, 3, 2, 1}, rng);
  const Mps r = reversed(m);
  for (std::size_t i = 0; i < 16; ++i) {
    BitString v = oracle::bits_of(i, 4);
    BitString w(v.rbegin(), v.rend());
    EXPECT_NEAR(amplitude(r, w), amplitude(m, v), 1e-12);
  }
  EXPECT_EQ(reversed(r), m);
}

TEST(GaugeInvariance, RandomSweepOfMergeSplitKeepsAmplitudesAndBounds) {
  std::mt19937_64 rng(24);
  Mps m = random_init(8, 3, 5);
  const Mps start = m;
  SplitOptions opt;
  opt.max_rank = 3;
  for (std::size_t k = 0; k + 1 < 8; ++k) {
    m = split(m, merge(m, k), SplitDirection::Rightward, opt);
    EXPECT_LE(m.r_max(), 3u);
  }
  for (std::size_t k = 7; k-- > 0;) {
    m = split(m, merge(m, k), SplitDirection::Leftward, opt);
    EXPECT_LE(m.r_max(), 3u);
    EXPECT_LE(gauge_residual(m), 1e-10);
  }
  expect_same_amplitudes(start, m, rng);
}

TEST(RandomInit, LongChainStaysFinite) {
  const Mps m = random_init(784, 4, 3);
  EXPECT_NEAR(partition_function(m), 1.0, 1e-10);
  EXPECT_LE(gauge_residual(m), 1e-10);
}
