#include "oracles.hpp"
#include "umps/data.hpp"
#include "umps/errors.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace umps;
namespace fs = std::filesystem;

namespace {

// Row/column brute force: every row mask and every column mask, as sets.
std::set<BitString> bas_brute(std::size_t n) {
  std::set<BitString> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    BinaryImage rows{n, n, std::vector<std::uint8_t>(n * n)};
    BinaryImage cols{n, n, std::vector<std::uint8_t>(n * n)};
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        rows.bits[r * n + c] = (mask >> r) & 1U;
        cols.bits[r * n + c] = (mask >> c) & 1U;
      }
    out.insert(flatten(rows));
    out.insert(flatten(cols));
  }
  return out;
}

void put_be32(std::vector<std::uint8_t> &b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                     const std::vector<std::uint8_t> &pixels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxImagesMagic);
  put_be32(b, n);
  put_be32(b, rows);
  put_be32(b, cols);
  b.insert(b.end(), pixels.begin(), pixels.end());
  return b;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("umps_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::uint64_t fnv1a_ref(const std::vector<std::uint8_t> &b) {
  std::uint64_t h = 14695981039346656037ULL;
  for (auto x : b) h = (h ^ x) * 1099511628211ULL;
  return h;
}

}  // namespace

// ---------------------------------------------------------------- BAS

TEST(Bas, CountsForSmallAndLargeN) {
  EXPECT_EQ(bas_generate(1).size(), 2u);
  EXPECT_EQ(bas_generate(4).size(), 30u);
  EXPECT_EQ(bas_count(16), 131070u);
}

TEST(Bas, SixteenBySixteenFullSet) {
  const auto data = bas_generate(16);
  EXPECT_EQ(data.size(), 131070u);
  EXPECT_EQ(data.d, 256u);
  EXPECT_EQ(data.counts().size(), 131070u);
}

TEST(Bas, MatchesBruteForceUpToEight) {
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto data = bas_generate(n);
    const std::set<BitString> got(data.entries.begin(), data.entries.end());
    EXPECT_EQ(got.size(), data.size()) << "duplicates at n=" << n;
    EXPECT_EQ(got, bas_brute(n)) << "n=" << n;
    EXPECT_EQ(data.size(), 2 * (std::size_t{1} << n) - 2);
  }
}

TEST(Bas, OneByOneIsAllOnAndAllOff) {
  const auto data = bas_generate(1);
  const std::set<BitString> got(data.entries.begin(), data.entries.end());
  EXPECT_EQ(got, (std::set<BitString>{{0}, {1}}));
}

TEST(Bas, SampleModeIsSeededAndValid) {
  const auto a = bas_generate(5, BasSample{200, 7});
  EXPECT_EQ(a.size(), 200u);
  EXPECT_EQ(a.entries, bas_generate(5, BasSample{200, 7}).entries);
  EXPECT_NE(a.entries, bas_generate(5, BasSample{200, 8}).entries);
  for (const auto &e : a.entries) EXPECT_TRUE(is_bas(unflatten(e, 5, 5)));
  // With replacement: 200 draws from 62 patterns must repeat.
  EXPECT_LT(a.counts().size(), 200u);
}

TEST(Bas, ValidityChecker) {
  BinaryImage img{3, 3, {1, 1, 1, 0, 0, 0, 1, 1, 1}};
  EXPECT_TRUE(is_bas(img));
  img.bits[4] = 1;
  EXPECT_FALSE(is_bas(img));
  EXPECT_TRUE(is_bas(BinaryImage{3, 3, {0, 1, 0, 0, 1, 0, 0, 1, 0}}));
}

TEST(Dataset, EmpiricalDistributionSumsToOne) {
  const auto data = bas_generate(3, BasSample{101, 1});
  std::size_t total = 0;
  for (const auto &[v, c] : data.counts()) total += c;
  EXPECT_EQ(total, data.size());
}

TEST(Dataset, RejectsMalformedEntries) {
  EXPECT_THROW(make_dataset({}, "x"), ShapeError);
  EXPECT_THROW(make_dataset({{0, 1}, {1}}, "x"), ShapeError);
  EXPECT_THROW(make_dataset({{0, 2}}, "x"), ShapeError);
}

// ---------------------------------------------------------------- flatten

TEST(Flatten, TwoByTwoIsColumnMajor) {
  const BinaryImage img{2, 2, {1, 0, 0, 1}};  // [[a,b],[c,e]] = [[1,0],[0,1]]
  EXPECT_EQ(flatten(img), (BitString{1, 0, 0, 1}));
  const BinaryImage img2{2, 2, {1, 1, 0, 0}};  // a=1 b=1 c=0 e=0 -> (a,c,b,e)
  EXPECT_EQ(flatten(img2), (BitString{1, 0, 1, 0}));
}

TEST(Flatten, VerticalBarInFirstColumn) {
  BinaryImage img{16, 16, std::vector<std::uint8_t>(256, 0)};
  for (std::size_t r = 0; r < 16; ++r) img.bits[r * 16] = 1;
  const BitString v = flatten(img);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(v[i], i < 16 ? 1 : 0);
}

TEST(Flatten, InverseForManyShapes) {
  std::mt19937_64 rng(1);
  for (std::size_t w = 1; w <= 7; ++w)
    for (std::size_t h = 1; h <= 7; ++h) {
      BinaryImage img{w, h, std::vector<std::uint8_t>(w * h)};
      for (auto &b : img.bits) b = static_cast<std::uint8_t>(rng() & 1U);
      EXPECT_EQ(unflatten(flatten(img), w, h), img);
    }
  EXPECT_THROW(unflatten(BitString(5), 2, 2), ShapeError);
}

TEST(Flatten, NonSquareIndexFormula) {
  BinaryImage img{3, 2, {0, 0, 0, 0, 0, 0}};
  img.bits[1 * 3 + 2] = 1;  // row 2, column 3 (1-based)
  const BitString v = flatten(img);
  // (c - 1) * h + r, 1-based: (3 - 1) * 2 + 2 = 6.
  EXPECT_EQ(v[5], 1);
  EXPECT_EQ(std::count(v.begin(), v.end(), 1), 1);
}

// ---------------------------------------------------------------- binarize

TEST(Binarize, ZeroBoundaryAndGradient) {
  EXPECT_EQ(binarize(GrayImage{2, 2, {0, 0, 0, 0}}).bits, (std::vector<std::uint8_t>{0, 0, 0, 0}));
  EXPECT_EQ(binarize(GrayImage{1, 1, {128}}).bits[0], 1);
  EXPECT_EQ(binarize(GrayImage{1, 1, {127}}).bits[0], 0);
  GrayImage grad{16, 16, std::vector<std::uint8_t>(256)};
  for (std::size_t i = 0; i < 256; ++i) grad.pixels[i] = static_cast<std::uint8_t>(i);
  for (double t : {0.0, 0.25, 0.5, 0.9}) {
    const BinaryImage b = binarize(grad, t);
    EXPECT_EQ(b.width, 16u);
    for (std::size_t i = 0; i < 256; ++i)
      EXPECT_EQ(b.bits[i], static_cast<double>(i) / 255.0 > t ? 1 : 0) << i << " at " << t;
  }
}

// ---------------------------------------------------------------- IDX

TEST(Idx, FourByteFileIsTruncatedAtOffsetFour) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxImagesMagic);
  try {
    parse_idx(b);
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_NE(std::string(e.what()).find("offset 4"), std::string::npos);
  }
}

TEST(Idx, TwoImagesRoundTripExactly) {
  const std::vector<std::uint8_t> px{0, 17, 255, 128, 1, 2, 3, 4};
  const IdxData idx = parse_idx(idx_images(2, 2, 2, px));
  ASSERT_EQ(idx.images.size(), 2u);
  EXPECT_EQ(idx.images[0], (GrayImage{2, 2, {0, 17, 255, 128}}));
  EXPECT_EQ(idx.images[1], (GrayImage{2, 2, {1, 2, 3, 4}}));
}

TEST(Idx, NonSquareImagesKeepRowsAndCols) {
  std::vector<std::uint8_t> px(6);
  for (std::size_t i = 0; i < 6; ++i) px[i] = static_cast<std::uint8_t>(i * 40);
  const IdxData idx = parse_idx(idx_images(1, 2, 3, px));
  EXPECT_EQ(idx.images[0].height, 2u);
  EXPECT_EQ(idx.images[0].width, 3u);
  // Row-major source, column-major flattening.
  const BitString v = flatten(binarize(idx.images[0], 0.3));
  // pixels/255 > 0.3 -> indices 2..5 (80,120,160,200): rows {0:[0,40,80],1:[120,160,200]}
  EXPECT_EQ(v, (BitString{0, 1, 0, 1, 1, 1}));
}

TEST(Idx, Labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxLabelsMagic);
  put_be32(b, 3);
  b.insert(b.end(), {7, 0, 9});
  const IdxData idx = parse_idx(b);
  EXPECT_EQ(idx.labels, (std::vector<std::uint8_t>{7, 0, 9}));
}

TEST(Idx, BadMagicNamesExpectedValues) {
  std::vector<std::uint8_t> b(16, 0);
  try {
    parse_idx(b);
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 0u);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("0x00000803"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0x00000801"), std::string::npos) << msg;
  }
}

TEST(Idx, TruncatedPayloadAndOverflow) {
  auto b = idx_images(2, 2, 2, {1, 2, 3, 4, 5});
  try {
    parse_idx(b);
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 21u);
  }
  EXPECT_THROW(parse_idx(idx_images(0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu, {})), FormatError);
}

TEST(Idx, SubsetIsSeededWithoutReplacement) {
  std::vector<std::uint8_t> px;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 4; ++j) px.push_back(static_cast<std::uint8_t>((i >> j) & 1 ? 255 : 0));
  const IdxData idx = parse_idx(idx_images(50, 2, 2, px));
  const auto a = idx_subset(idx, 10, 3);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(a.d, 4u);
  EXPECT_EQ(a.entries, idx_subset(idx, 10, 3).entries);
  EXPECT_THROW(idx_subset(idx, 51, 3), ShapeError);
}

TEST(Idx, LoadFromFile) {
  TempDir tmp;
  const auto bytes = idx_images(1, 2, 2, {9, 8, 7, 6});
  std::ofstream(tmp.path / "x.idx", std::ios::binary)
      .write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  EXPECT_EQ(load_idx(tmp.path / "x.idx").images[0].pixels, (std::vector<std::uint8_t>{9, 8, 7, 6}));
  EXPECT_THROW(load_idx(tmp.path / "missing.idx"), IoError);
}

// ---------------------------------------------------------------- text / PGM

TEST(DatasetText, CommentsBlanksAndErrors) {
  std::istringstream in("# header\n0101\n\n1100\n  # indented comment\n0101\n");
  const auto data = parse_dataset_text(in, "t");
  EXPECT_EQ(data.size(), 3u);
  EXPECT_EQ(data.entries[1], (BitString{1, 1, 0, 0}));
  std::istringstream bad("0101\n01x1\n");
  try {
    parse_dataset_text(bad, "t");
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 7u);
  }
  std::istringstream ragged("0101\n011\n");
  EXPECT_THROW(parse_dataset_text(ragged, "t"), FormatError);
}

TEST(DatasetText, WriteThenParse) {
  const auto data = bas_generate(3);
  std::ostringstream out;
  const std::vector<std::string> header{"umps test", "seed: 1"};
  write_dataset_text(out, data.entries, header);
  EXPECT_EQ(out.str().substr(0, 12), "# umps test\n");
  std::istringstream in(out.str());
  EXPECT_EQ(parse_dataset_text(in, "t").entries, data.entries);
}

TEST(Pgm, GridLayout) {
  const std::vector<BinaryImage> imgs{{2, 2, {1, 0, 0, 1}}, {2, 2, {1, 1, 1, 1}}, {2, 2, {0, 0, 0, 0}}};
  std::ostringstream out;
  write_pgm(out, imgs, 2);
  const std::string s = out.str();
  const std::string header = "P5\n5 5\n255\n";
  ASSERT_EQ(s.substr(0, header.size()), header);
  const std::string px = s.substr(header.size());
  ASSERT_EQ(px.size(), 25u);
  auto at = [&](int r, int c) { return static_cast<std::uint8_t>(px[r * 5 + c]); };
  EXPECT_EQ(at(0, 0), 255);
  EXPECT_EQ(at(0, 1), 0);
  EXPECT_EQ(at(0, 2), 128);  // gutter
  EXPECT_EQ(at(0, 3), 255);
  EXPECT_EQ(at(2, 0), 128);
  EXPECT_EQ(at(3, 0), 0);
  EXPECT_EQ(at(4, 4), 128);  // empty slot
}

// ---------------------------------------------------------------- model files

TEST(ModelFile, ByteLayoutOfTinyModel) {
  std::vector<MpsCore> cores;
  cores.emplace_back(DenseTensor({1, 2, 1}, {0.6, 0.8}));
  cores.emplace_back(DenseTensor({1, 2, 1}, {1.0, 0.0}));
  const Mps m(std::move(cores), Gauge::center(0));
  std::vector<std::uint8_t> want{'U', 'M', 'P', 'S', 1, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0};
  auto le32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) want.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto le64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) want.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  for (const auto &vals : {std::vector<double>{0.6, 0.8}, std::vector<double>{1.0, 0.0}}) {
    le32(1);
    le32(1);
    for (double x : vals) {
      std::uint64_t u;
      std::memcpy(&u, &x, 8);
      le64(u);
    }
  }
  le64(fnv1a_ref(want));
  EXPECT_EQ(serialize_model(m), want);
}

TEST(ModelFile, RandomModelRoundTripIsBitExact) {
  TempDir tmp;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Mps m = canonicalize(random_init(8, 5, seed), seed % 8);
    save_model(m, tmp.path / "m.umps");
    const Mps back = load_model(tmp.path / "m.umps");
    EXPECT_EQ(back.gauge(), m.gauge());
    ASSERT_EQ(back.length(), m.length());
    for (std::size_t k = 0; k < 8; ++k) {
      const auto a = m.core(k).tensor().data();
      const auto b = back.core(k).tensor().data();
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(a[i]), std::bit_cast<std::uint64_t>(b[i]));
    }
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 10; ++i) {
      BitString v(8);
      for (auto &x : v) x = static_cast<std::uint8_t>(rng() & 1U);
      EXPECT_EQ(amplitude(back, v), amplitude(m, v));
    }
  }
  EXPECT_FALSE(fs::exists(tmp.path / "m.umps.tmp"));
}

TEST(ModelFile, CorruptedByteIsChecksumError) {
  const auto bytes = serialize_model(random_init(5, 3, 1));
  for (std::size_t pos : {std::size_t{12}, std::size_t{30}, bytes.size() - 9, bytes.size() - 1}) {
    auto bad = bytes;
    bad[pos] ^= 0x40;
    EXPECT_THROW(deserialize_model(bad), ChecksumError) << "byte " << pos;
  }
}

TEST(ModelFile, RefusesNewerVersionAndBadMagic) {
  auto bytes = serialize_model(random_init(4, 2, 1));
  auto newer = bytes;
  newer[4] = 2;
  EXPECT_THROW(deserialize_model(newer), VersionError);
  auto old = bytes;
  old[4] = 0;
  EXPECT_THROW(deserialize_model(old), VersionError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_model(magic), FormatError);
}

TEST(ModelFile, TruncationAndTrailingBytes) {
  const auto bytes = serialize_model(random_init(4, 2, 1));
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 10);
  EXPECT_THROW(deserialize_model(cut), FormatError);
  // Rebuild a well-checksummed file with one extra payload byte.
  std::vector<std::uint8_t> extra(bytes.begin(), bytes.end() - 8);
  extra.push_back(0);
  const auto sum = fnv1a_ref(extra);
  for (int i = 0; i < 8; ++i) extra.push_back(static_cast<std::uint8_t>(sum >> (8 * i)));
  EXPECT_THROW(deserialize_model(extra), FormatError);
}

TEST(ModelFile, MissingFileIsIoError) {
  EXPECT_THROW(load_model("/nonexistent/dir/m.umps"), IoError);
  EXPECT_THROW(save_model(random_init(3, 2, 0), "/nonexistent/dir/m.umps"), IoError);
}
