// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_ERRORS_HPP
#define HDRDIFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hdrdiff {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Operand shapes disagree.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// An index (timestep, plan position, ...) is out of range.
class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Input values fall outside the domain of a transform.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A reverse step was requested with t_prev >= t.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or latent.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A sliding-window pass left a pixel without any estimate.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Reading a file or dataset directory failed.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Run configuration rejected; key() names the first offending key.
/// Tensor container errors.
class BadMagicError : public LoadError {
 public:
  using LoadError::LoadError;
};

class VersionMismatchError : public LoadError {
 public:
  using LoadError::LoadError;
};

class TruncatedFileError : public LoadError {
 public:
  using LoadError::LoadError;
};

class DimOverflowError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace hdrdiff

#endif  // HDRDIFF_ERRORS_HPP
