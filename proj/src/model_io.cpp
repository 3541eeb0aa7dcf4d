#include "umps/data.hpp"

#include "umps/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace umps {
namespace {

constexpr std::uint8_t kMagic[4] = {'U', 'M', 'P', 'S'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 1 + 4;
constexpr std::size_t kChecksumBytes = 8;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put_le(std::vector<std::uint8_t> &out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class LeReader {
 public:
  explicit LeReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T))
      throw FormatError(bytes_.size(), "model file truncated at byte offset " +
                                           std::to_string(bytes_.size()));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Mps &mps) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kModelFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(mps.length()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(mps.gauge().kind));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(mps.gauge().site));
  for (const auto &core : mps.cores()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(core.r_left()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(core.r_right()));
    for (double x : core.tensor().data()) put_le(out, std::bit_cast<std::uint64_t>(x));
  }
  put_le(out, fnv1a(out));
  return out;
}

Mps deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(0, "not a model file: missing \"UMPS\" magic");
  LeReader in(bytes);
  in.get<std::uint32_t>();
  const auto version = in.get<std::uint16_t>();
  if (version > kModelFormatVersion)
    throw VersionError("model format version " + std::to_string(version) +
                       " is newer than supported version " +
                       std::to_string(kModelFormatVersion));
  if (version != kModelFormatVersion)
    throw VersionError("unsupported model format version " + std::to_string(version));
  if (bytes.size() < kHeaderBytes + kChecksumBytes)
    throw FormatError(bytes.size(), "model file truncated at byte offset " +
                                        std::to_string(bytes.size()));

  const auto payload = bytes.first(bytes.size() - kChecksumBytes);
  LeReader tail(bytes.subspan(payload.size()));
  if (tail.get<std::uint64_t>() != fnv1a(payload))
    throw ChecksumError("model checksum mismatch; file is corrupted");

  LeReader body(payload);
  body.get<std::uint32_t>();
  body.get<std::uint16_t>();
  const std::size_t d = body.get<std::uint32_t>();
  const auto kind = body.get<std::uint8_t>();
  const std::size_t site = body.get<std::uint32_t>();
  if (kind > static_cast<std::uint8_t>(GaugeKind::TwoSiteCenter))
    throw FormatError(10, "unknown gauge code " + std::to_string(kind));
  if (d == 0) throw FormatError(6, "model has no sites");

  std::vector<MpsCore> cores;
  cores.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t at = body.offset();
    const std::size_t rl = body.get<std::uint32_t>();
    const std::size_t rr = body.get<std::uint32_t>();
    if (rl == 0 || rr == 0)
      throw FormatError(at, "core " + std::to_string(k) + " has a zero bond");
    const std::size_t count = rl * kPhysDim * rr;
    if ((payload.size() - body.offset()) / 8 < count)
      throw FormatError(body.offset(), "model file truncated in core " +
                                           std::to_string(k));
    std::vector<double> data(count);
    for (auto &x : data) x = std::bit_cast<double>(body.get<std::uint64_t>());
    cores.emplace_back(DenseTensor({rl, kPhysDim, rr}, std::move(data)));
  }
  if (body.offset() != payload.size())
    throw FormatError(body.offset(), "trailing bytes after the last core");
  try {
    return Mps(std::move(cores), Gauge{static_cast<GaugeKind>(kind), site});
  } catch (const ShapeError &e) {
    throw FormatError(kHeaderBytes, std::string("inconsistent model: ") + e.what());
  }
}

void save_model(const Mps &mps, const std::filesystem::path &path) {
  const auto bytes = serialize_model(mps);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move model into place at " + path.string() + ": " +
                        ec.message());
}

Mps load_model(const std::filesystem::path &path) {
  return deserialize_model(read_file_bytes(path));
}

}  // namespace umps
