#pragma once

#include <stdexcept>
#include <string>

namespace bundlesim {

// Every error carries a stable exit code so the CLI can map failures without
// inspecting messages.
enum class ExitCode : int {
  Ok = 0,
  Usage = 2,
  Config = 3,
  Numerical = 4,
  NoData = 5,
  Io = 6,
  Calibration = 7,
  Internal = 10,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::Internal)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Requested problem exceeds a hard size limit.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(what, ExitCode::Config) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what, ExitCode::Internal) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error(what, ExitCode::Config) {}
};

// Step too coarse for the integrator or Monte Carlo jump bookkeeping.
class StepSizeError : public Error {
 public:
  explicit StepSizeError(const std::string& what) : Error(what, ExitCode::Numerical) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, ExitCode::Numerical) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what) : Error(what, ExitCode::Calibration) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::Config) {}
};

class NoDataError : public Error {
 public:
  explicit NoDataError(const std::string& what) : Error(what, ExitCode::NoData) {}
};

// A statistic whose denominator vanished (for example no n-photon events).
class UndefinedEstimateError : public Error {
 public:
  explicit UndefinedEstimateError(const std::string& what) : Error(what, ExitCode::NoData) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, ExitCode::Io) {}
};

}  // namespace bundlesim
