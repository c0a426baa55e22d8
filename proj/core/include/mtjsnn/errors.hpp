#pragma once

#include <stdexcept>
#include <string>

namespace mtjsnn {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, geometry or configuration values.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// File access or format failures.
class IoError : public Error {
public:
  using Error::Error;
};

/// A computation could not produce a trustworthy result (unreachable
/// calibration target, non-monotone statistics, unbracketed crossing).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Out-of-order call into the write/read/reset device cycle.
class ProtocolError : public Error {
public:
  using Error::Error;
};

} // namespace mtjsnn
