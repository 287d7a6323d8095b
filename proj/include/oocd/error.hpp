// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oocd {

/// Base of every error thrown by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const std::string& path)
      : Error("file not found: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& reason)
      : Error("malformed record at line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class TooFewRecords : public Error {
 public:
  using Error::Error;
};

class OutOfRangeScore : public Error {
 public:
  using Error::Error;
};

class EmptyCaption : public Error {
 public:
  EmptyCaption() : Error("caption is empty after trimming") {}
};

class MalformedVector : public Error {
 public:
  MalformedVector() : Error("no bracketed list of 6 integers found in response") {}
};

/// A parsed component fell outside [0,9]. `component()` is 1-based.
class OutOfRange : public Error {
 public:
  explicit OutOfRange(std::size_t component)
      : Error("feature component " + std::to_string(component) + " outside [0,9]"),
        component_(component) {}
  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

class ProviderUnreachable : public Error {
 public:
  using Error::Error;
};

class RateLimited : public Error {
 public:
  using Error::Error;
};

/// Non-retryable provider rejection (bad key, bad request, unexpected body).
class ProviderError : public Error {
 public:
  using Error::Error;
};

class ExtractionFailed : public Error {
 public:
  ExtractionFailed(const std::string& record, const std::string& last_error)
      : Error("feature extraction failed for record '" + record + "': " + last_error),
        record_(record),
        last_error_(last_error) {}
  const std::string& record() const noexcept { return record_; }
  const std::string& last_error() const noexcept { return last_error_; }

 private:
  std::string record_;
  std::string last_error_;
};

class SidecarUnreachable : public Error {
 public:
  using Error::Error;
};

class SidecarProtocolError : public Error {
 public:
  using Error::Error;
};

class MixedSimilaritySources : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class FeatureOrderMismatch : public Error {
 public:
  FeatureOrderMismatch() : Error("row feature order differs from the model's feature order") {}
};

class UnsupportedVersion : public Error {
 public:
  using Error::Error;
};

class CorruptModel : public Error {
 public:
  using Error::Error;
};

class MissingPredictions : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps a module error with the id of the record being processed.
class RecordError : public Error {
 public:
  RecordError(const std::string& record, const std::string& what)
      : Error("record '" + record + "': " + what), record_(record) {}
  const std::string& record() const noexcept { return record_; }

 private:
  std::string record_;
};

}  // namespace oocd
