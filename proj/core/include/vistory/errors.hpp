// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vistory {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kConfig = 2,
  kBackend = 3,
  kData = 4,
};

/// Base class of every error raised by the library. Each error belongs to
/// one of three families (config, backend, data) that map onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

class BackendError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kBackend; }
};

class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

// Data family.
class DimensionError : public DataError {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual);
  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// A value outside its declared domain (e.g. class id >= K).
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class TrainingDivergedError : public DataError {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch);
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// JSON (or other text) that failed to parse; carries the byte offset.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset);
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

/// A persisted artifact could not be loaded; names the artifact.
class ArtifactError : public DataError {
 public:
  ArtifactError(const std::string& artifact, const std::string& what);
  const std::string& artifact() const noexcept { return artifact_; }

 private:
  std::string artifact_;
};

// Backend family.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace vistory
