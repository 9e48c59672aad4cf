#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tmd {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TMD_DEFINE_ERROR(Name)                                        \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

TMD_DEFINE_ERROR(ShapeMismatch)
TMD_DEFINE_ERROR(NonFiniteResult)
TMD_DEFINE_ERROR(NonScalarLoss)
TMD_DEFINE_ERROR(InvalidBandwidth)
TMD_DEFINE_ERROR(DegenerateNormalization)
TMD_DEFINE_ERROR(RowCountMismatch)
TMD_DEFINE_ERROR(DegenerateRegion)
TMD_DEFINE_ERROR(UnknownKey)
TMD_DEFINE_ERROR(FormatError)

#undef TMD_DEFINE_ERROR

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : Error("ConfigError", field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Training produced a non-finite loss; carries the optimizer step index.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(std::size_t step, const std::string& what)
      : Error("NonFiniteLoss", "step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace tmd
