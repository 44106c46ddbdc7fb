#pragma once

#include <stdexcept>
#include <string>

namespace eacorr {

/// Invalid configuration or violated precondition on user-supplied settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data does not have the expected shape or contents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatErrc {
  io,
  bad_magic,
  version_mismatch,
  truncated,
  dimension_mismatch,
  parse,
};

/// Malformed or unreadable file.
class FormatError : public DataError {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : DataError(what), code_(code) {}
  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

/// A numerical routine met a domain it cannot handle (indefinite matrix,
/// non-finite loss, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eacorr
