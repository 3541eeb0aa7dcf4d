#include "umps/data.hpp"

#include "umps/errors.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace umps {
namespace {

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  void need(std::size_t n) const {
    // The reported offset is the first missing byte.
    if (bytes_.size() - pos_ < n)
      throw FormatError(bytes_.size(), "truncated at byte offset " +
                                           std::to_string(bytes_.size()) + ": need " +
                                           std::to_string(n) + " bytes from offset " +
                                           std::to_string(pos_));
  }

  std::uint32_t u32_be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool mul_overflows(std::size_t a, std::size_t b, std::size_t &out) {
  return __builtin_mul_overflow(a, b, &out);
}

}  // namespace

// ----------------------------------------------------------------- dataset

std::map<BitString, std::size_t> BinaryDataset::counts() const {
  std::map<BitString, std::size_t> c;
  for (const auto &e : entries) ++c[e];
  return c;
}

BinaryDataset make_dataset(std::vector<BitString> entries, std::string source) {
  if (entries.empty()) throw ShapeError("dataset is empty");
  const std::size_t d = entries.front().size();
  if (d == 0) throw ShapeError("dataset strings must be non-empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].size() != d)
      throw ShapeError("dataset entry " + std::to_string(i) + " has length " +
                       std::to_string(entries[i].size()) + ", expected " +
                       std::to_string(d));
    for (std::uint8_t b : entries[i])
      if (b > 1)
        throw ShapeError("dataset entry " + std::to_string(i) +
                         " has a non-binary symbol");
  }
  return BinaryDataset{d, std::move(entries), std::move(source)};
}

// ---------------------------------------------------------------------- BAS

std::size_t bas_count(std::size_t n) {
  if (n < 1 || n > 62) throw ShapeError("bas: n must lie in [1, 62]");
  return 2 * (std::size_t{1} << n) - 2;
}

BinaryImage bas_pattern(std::size_t n, std::size_t index) {
  const std::size_t total = bas_count(n);
  if (index >= total) throw ShapeError("bas_pattern: index out of range");
  BinaryImage img{n, n, std::vector<std::uint8_t>(n * n, 0)};
  const std::size_t half = std::size_t{1} << n;
  if (index < half) {
    for (std::size_t r = 0; r < n; ++r)
      if ((index >> r) & 1U)
        for (std::size_t c = 0; c < n; ++c) img.bits[r * n + c] = 1;
  } else {
    const std::size_t mask = index - half + 1;  // 1 .. 2^n - 2
    for (std::size_t c = 0; c < n; ++c)
      if ((mask >> c) & 1U)
        for (std::size_t r = 0; r < n; ++r) img.bits[r * n + c] = 1;
  }
  return img;
}

BinaryDataset bas_generate(std::size_t n, std::variant<BasAll, BasSample> mode) {
  const std::size_t total = bas_count(n);
  std::vector<BitString> entries;
  std::string source = "bas:" + std::to_string(n);
  if (std::holds_alternative<BasAll>(mode)) {
    entries.reserve(total);
    for (std::size_t i = 0; i < total; ++i) entries.push_back(flatten(bas_pattern(n, i)));
  } else {
    const auto &s = std::get<BasSample>(mode);
    if (s.count == 0) throw ShapeError("bas sample count must be positive");
    std::mt19937_64 rng(s.seed);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    entries.reserve(s.count);
    for (std::size_t i = 0; i < s.count; ++i)
      entries.push_back(flatten(bas_pattern(n, pick(rng))));
    source += ":sample:" + std::to_string(s.count) + ":" + std::to_string(s.seed);
  }
  return make_dataset(std::move(entries), std::move(source));
}

bool is_bas(const BinaryImage &img) {
  auto rows_constant = [&] {
    for (std::size_t r = 0; r < img.height; ++r)
      for (std::size_t c = 1; c < img.width; ++c)
        if (img.at(r, c) != img.at(r, 0)) return false;
    return true;
  };
  auto cols_constant = [&] {
    for (std::size_t c = 0; c < img.width; ++c)
      for (std::size_t r = 1; r < img.height; ++r)
        if (img.at(r, c) != img.at(0, c)) return false;
    return true;
  };
  return rows_constant() || cols_constant();
}

// --------------------------------------------------------------- flattening

BitString flatten(const BinaryImage &img) {
  if (img.bits.size() != img.width * img.height)
    throw ShapeError("flatten: image bits do not match width x height");
  BitString out(img.bits.size());
  for (std::size_t c = 0; c < img.width; ++c)
    for (std::size_t r = 0; r < img.height; ++r)
      out[c * img.height + r] = img.bits[r * img.width + c];
  return out;
}

BinaryImage unflatten(std::span<const std::uint8_t> bits, std::size_t width,
                      std::size_t height) {
  if (bits.size() != width * height)
    throw ShapeError("unflatten: " + std::to_string(bits.size()) +
                     " bits do not fill " + std::to_string(width) + "x" +
                     std::to_string(height));
  BinaryImage img{width, height, std::vector<std::uint8_t>(bits.size())};
  for (std::size_t c = 0; c < width; ++c)
    for (std::size_t r = 0; r < height; ++r)
      img.bits[r * width + c] = bits[c * height + r];
  return img;
}

BinaryImage binarize(const GrayImage &img, double threshold) {
  BinaryImage out{img.width, img.height, std::vector<std::uint8_t>(img.pixels.size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.bits[i] = static_cast<double>(img.pixels[i]) / 255.0 > threshold ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------- IDX

IdxData parse_idx(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  IdxData out;
  out.magic = in.u32_be();
  if (out.magic == kIdxImagesMagic) {
    const std::size_t n = in.u32_be();
    const std::size_t rows = in.u32_be();
    const std::size_t cols = in.u32_be();
    std::size_t per_image = 0;
    std::size_t total = 0;
    if (mul_overflows(rows, cols, per_image) || mul_overflows(per_image, n, total))
      throw FormatError(4, "dimension overflow: " + std::to_string(n) + " x " +
                               std::to_string(rows) + " x " + std::to_string(cols));
    in.need(total);
    out.images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto px = in.take(per_image);
      out.images.push_back(GrayImage{cols, rows, {px.begin(), px.end()}});
    }
  } else if (out.magic == kIdxLabelsMagic) {
    const std::size_t n = in.u32_be();
    auto px = in.take(n);
    out.labels.assign(px.begin(), px.end());
  } else {
    throw FormatError(0, "bad IDX magic " + hex32(out.magic) + "; expected " +
                             hex32(kIdxImagesMagic) + " (images) or " +
                             hex32(kIdxLabelsMagic) + " (labels)");
  }
  return out;
}

IdxData load_idx(const std::filesystem::path &path) {
  const auto bytes = read_file_bytes(path);
  return parse_idx(bytes);
}

BinaryDataset idx_subset(const IdxData &idx, std::size_t count,
                         std::uint64_t seed, double threshold) {
  if (idx.images.empty()) throw ShapeError("idx_subset: file holds no images");
  if (count == 0 || count > idx.images.size())
    throw ShapeError("idx_subset: count must lie in [1, " +
                     std::to_string(idx.images.size()) + "]");
  std::vector<std::size_t> order(idx.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<BitString> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    entries.push_back(flatten(binarize(idx.images[order[i]], threshold)));
  return make_dataset(std::move(entries), "idx:" + std::to_string(count) + ":" +
                                              std::to_string(seed));
}

// ------------------------------------------------------------- text / PGM

BinaryDataset parse_dataset_text(std::istream &in, std::string source) {
  std::vector<BitString> entries;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    std::size_t lead = 0;
    while (lead < line.size() && std::isspace(static_cast<unsigned char>(line[lead])))
      ++lead;
    if (lead == line.size()) continue;
    BitString bits;
    bits.reserve(line.size() - lead);
    for (std::size_t i = lead; i < line.size(); ++i) {
      if (line[i] != '0' && line[i] != '1')
        throw FormatError(line_start + i, "dataset text: unexpected character '" +
                                              std::string(1, line[i]) + "'");
      bits.push_back(static_cast<std::uint8_t>(line[i] - '0'));
    }
    if (!entries.empty() && bits.size() != entries.front().size())
      throw FormatError(line_start, "dataset text: line length " +
                                        std::to_string(bits.size()) +
                                        " differs from " +
                                        std::to_string(entries.front().size()));
    entries.push_back(std::move(bits));
  }
  return make_dataset(std::move(entries), std::move(source));
}

BinaryDataset load_dataset_text(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  return parse_dataset_text(in, "file:" + path.string());
}

void write_dataset_text(std::ostream &out, std::span<const BitString> entries,
                        std::span<const std::string> header) {
  for (const auto &h : header) out << "# " << h << '\n';
  for (const auto &e : entries) {
    for (std::uint8_t b : e) out << static_cast<char>('0' + b);
    out << '\n';
  }
}

void write_pgm(std::ostream &out, std::span<const BinaryImage> images,
               std::size_t columns) {
  if (images.empty()) throw ShapeError("write_pgm: no images");
  if (columns == 0) throw ShapeError("write_pgm: columns must be positive");
  const std::size_t w = images.front().width;
  const std::size_t h = images.front().height;
  for (const auto &img : images)
    if (img.width != w || img.height != h)
      throw ShapeError("write_pgm: images differ in size");
  const std::size_t cols = std::min(columns, images.size());
  const std::size_t rows = (images.size() + cols - 1) / cols;
  const std::size_t W = cols * w + (cols - 1);
  const std::size_t H = rows * h + (rows - 1);
  std::vector<std::uint8_t> canvas(W * H, 128);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t x0 = (i % cols) * (w + 1);
    const std::size_t y0 = (i / cols) * (h + 1);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c)
        canvas[(y0 + r) * W + x0 + c] = images[i].at(r, c) ? 255 : 0;
  }
  out << "P5\n" << W << ' ' << H << "\n255\n";
  out.write(reinterpret_cast<const char *>(canvas.data()),
            static_cast<std::streamsize>(canvas.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace umps
