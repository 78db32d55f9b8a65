#pragma once

#include <stdexcept>
#include <string>

namespace repscope {

/// Base class for every error the toolkit raises on bad input or bad files.
/// The CLI maps these to exit code 1; anything else is an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by caller-provided values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// LREP or manifest content is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (missing, unreadable, unwritable).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A metric was requested on a bundle that lacks the needed granularity.
class GranularityError : public Error {
 public:
  using Error::Error;
};

}  // namespace repscope
