// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace graft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file did not match its declared format. Carries the byte offset (binary
/// formats) or 1-based line number (text formats) of the first bad item.
class FormatError : public Error {
 public:
  enum class Unit { byte, line };

  FormatError(std::string path, Unit unit, std::uint64_t location, const std::string& message);

  const std::string& path() const noexcept { return path_; }
  Unit unit() const noexcept { return unit_; }
  std::uint64_t location() const noexcept { return location_; }

 private:
  std::string path_;
  Unit unit_;
  std::uint64_t location_;
};

/// Invalid user configuration; names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace graft
