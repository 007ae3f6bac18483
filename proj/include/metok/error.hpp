// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace metok {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (k > T, stride < 1, ...).
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Malformed or inconsistent input data. The CLI maps these to exit code 2.
class DataError : public Error {
  public:
    using Error::Error;
};

class BadMagicError : public DataError {
  public:
    using DataError::DataError;
};

class TruncatedError : public DataError {
  public:
    using DataError::DataError;
};

class DimensionOverflowError : public DataError {
  public:
    using DataError::DataError;
};

class UnsupportedRecordError : public DataError {
  public:
    using DataError::DataError;
};

class ConfigError : public DataError {
  public:
    using DataError::DataError;
};

/// The retention schedule asked for more tokens than survive.
class ScheduleError : public Error {
  public:
    using Error::Error;
};

}  // namespace metok
