#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace umps {

/// Base class for every error raised by the library. `kind()` is a short
/// stable token used by the CLI when it prints a machine-parsable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string &what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string &kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Shape, range or argument violations.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string &what) : Error("shape", what) {}
};

class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string &what) : Error("non_finite", what) {}
};

/// Gauge metadata does not permit the requested operation, or the norm has
/// drifted away from the unit sphere.
class GaugeError : public Error {
 public:
  explicit GaugeError(const std::string &what) : Error("gauge", what) {}
};

/// A training sample has (numerically) zero amplitude, so its log-likelihood
/// and gradient contribution are undefined.
class SingularSampleError : public Error {
 public:
  SingularSampleError(std::size_t sample, const std::string &what)
      : Error("singular_sample", what), sample_(sample) {}
  std::size_t sample() const noexcept { return sample_; }

 private:
  std::size_t sample_;
};

class StepError : public Error {
 public:
  explicit StepError(const std::string &what) : Error("step", what) {}
};

class UnnormalizedModelError : public Error {
 public:
  explicit UnnormalizedModelError(const std::string &what)
      : Error("unnormalized", what) {}
};

class ImpossibleEvidenceError : public Error {
 public:
  explicit ImpossibleEvidenceError(const std::string &what)
      : Error("impossible_evidence", what) {}
};

/// Malformed or truncated file contents. `offset()` is the byte offset at
/// which parsing failed.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string &what)
      : Error("format", what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ChecksumError : public Error {
 public:
  explicit ChecksumError(const std::string &what) : Error("checksum", what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string &what) : Error("version", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &what) : Error("io", what) {}
};

}  // namespace umps
