#pragma once

#include <stdexcept>
#include <string>

namespace rfs {

// Hilbert-space or density-matrix size beyond the supported exact treatment.
class capacity_error : public std::length_error {
 public:
  explicit capacity_error(const std::string& what) : std::length_error(what) {}
};

// Rejection sampling of atom positions failed to terminate.
class sampling_error : public std::runtime_error {
 public:
  explicit sampling_error(const std::string& what) : std::runtime_error(what) {}
};

// Time propagation failed; carries the time at which the integrator gave up.
class propagation_error : public std::runtime_error {
 public:
  propagation_error(double t, const std::string& what)
      : std::runtime_error("propagation failed at t = " + std::to_string(t) +
                           " us: " + what),
        t_fail(t) {}
  double t_fail;
};

// Invalid run configuration; carries the offending field path.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field_path(field) {}
  std::string field_path;
};

// Calibration grid search finished without reaching the requested target.
class calibration_failed : public std::runtime_error {
 public:
  explicit calibration_failed(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace rfs
