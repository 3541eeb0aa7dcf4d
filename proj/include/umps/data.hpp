#pragma once

#include "umps/mps.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace umps {

/// Binary image, bits stored row-major: bits[row * width + col].
struct BinaryImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return bits[row * width + col];
  }
  friend bool operator==(const BinaryImage &, const BinaryImage &) = default;
};

/// 8-bit grayscale image, pixels stored row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const GrayImage &, const GrayImage &) = default;
};

/// Training multiset T of length-d bit strings. Duplicates are allowed.
struct BinaryDataset {
  std::size_t d = 0;
  std::vector<BitString> entries;
  std::string source;

  std::size_t size() const noexcept { return entries.size(); }

  /// Frequency of every distinct string. The empirical distribution is
  /// count / size() and sums to one exactly over the integer counts.
  std::map<BitString, std::size_t> counts() const;
};

/// Validates lengths and symbols, then builds the dataset.
BinaryDataset make_dataset(std::vector<BitString> entries, std::string source);

// ------------------------------------------------------------ Bars & Stripes

struct BasAll {};
struct BasSample {
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

/// Number of distinct n x n bars-and-stripes images, 2 * 2^n - 2.
std::size_t bas_count(std::size_t n);

/// Pattern number `index` in [0, bas_count(n)). Indices below 2^n are
/// "bars" (bit i of the index switches row i on); the rest are "stripes"
/// over the non-constant column masks 1 .. 2^n - 2, so the all-on and
/// all-off images appear once.
BinaryImage bas_pattern(std::size_t n, std::size_t index);

/// Every pattern once (BasAll) or `count` uniform draws with replacement.
BinaryDataset bas_generate(std::size_t n,
                           std::variant<BasAll, BasSample> mode = BasAll{});

/// True when every row is constant or every column is constant.
bool is_bas(const BinaryImage &img);

// --------------------------------------------------------------- flattening

/// Column-major flattening: output[c * height + r] = pixel(r, c).
BitString flatten(const BinaryImage &img);

BinaryImage unflatten(std::span<const std::uint8_t> bits, std::size_t width,
                      std::size_t height);

/// bit = 1 iff pixel / 255 > threshold.
BinaryImage binarize(const GrayImage &img, double threshold = 0.5);

// ---------------------------------------------------------------------- IDX

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Parsed IDX file. Exactly one of `images` / `labels` is populated,
/// depending on `magic`.
struct IdxData {
  std::uint32_t magic = 0;
  std::vector<GrayImage> images;
  std::vector<std::uint8_t> labels;
};

/// Big-endian IDX parser (u8 payload). Throws FormatError carrying the byte
/// offset of the failure on bad magic, truncation or dimension overflow.
IdxData parse_idx(std::span<const std::uint8_t> bytes);
IdxData load_idx(const std::filesystem::path &path);

/// `count` distinct images chosen uniformly at random (seeded), binarized
/// and flattened column-major.
BinaryDataset idx_subset(const IdxData &idx, std::size_t count,
                         std::uint64_t seed, double threshold = 0.5);

// ------------------------------------------------------------- text / PGM

/// One bit string per line; '#' starts a comment, blank lines are ignored.
BinaryDataset parse_dataset_text(std::istream &in, std::string source);
BinaryDataset load_dataset_text(const std::filesystem::path &path);

/// Writes `header` lines as '#' comments, then one string per line.
void write_dataset_text(std::ostream &out, std::span<const BitString> entries,
                        std::span<const std::string> header = {});

/// Binary PGM (P5) tiling of equally sized images, `columns` per row with a
/// one-pixel mid-gray gutter. Bit 1 renders white (255).
void write_pgm(std::ostream &out, std::span<const BinaryImage> images,
               std::size_t columns);

// ------------------------------------------------------------ model files

/// Model file layout, all integers and floats little-endian:
///   "UMPS" | u16 version | u32 d | u8 gauge kind | u32 gauge site |
///   d x (u32 r_left | u32 r_right | r_left*2*r_right f64, row-major
///        over (left bond, physical, right bond)) |
///   u64 FNV-1a checksum of every preceding byte.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const Mps &mps);
Mps deserialize_model(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames it over `path`.
void save_model(const Mps &mps, const std::filesystem::path &path);
Mps load_model(const std::filesystem::path &path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);

}  // namespace umps
