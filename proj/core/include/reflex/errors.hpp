// SPDX-License-Identifier: Apache-2.0
/**
 * @file   errors.hpp
 * @brief  Exception hierarchy shared by every reflex module.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reflex {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument value (K < 2, empty inputs, unknown language, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input text that does not follow its format. `location()` is a 1-based
/// line number for line-oriented formats and a 0-based byte offset for
/// Newick.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Operation requested on a model whose embedding mode does not support it.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  enum class Kind { kCorrupt, kVersionMismatch, kTruncated };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace reflex
