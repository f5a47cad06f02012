#pragma once

#include <stdexcept>
#include <string>

namespace relmpc {

/// Precondition violation on a physical quantity (bounds, signs, units).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Requested wrench cannot be produced by nonnegative squared propeller speeds.
class InfeasibleWrenchError : public DomainError {
public:
  explicit InfeasibleWrenchError(const std::string& what) : DomainError(what) {}
};

/// Pitch at or beyond the Euler-rate transformation guard.
class SingularityError : public DomainError {
public:
  explicit SingularityError(const std::string& what) : DomainError(what) {}
};

/// Non-finite or diverging state encountered while integrating.
class IntegrationError : public std::runtime_error {
public:
  explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

/// Sensor geometry does not determine the measurement (zero displacement,
/// vertically aligned vehicles, ...).
class GeometryError : public DomainError {
public:
  explicit GeometryError(const std::string& what) : DomainError(what) {}
};

/// A measurement required to assemble the horizon problem is missing.
class SensingGapError : public std::runtime_error {
public:
  explicit SensingGapError(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension mismatch while assembling a horizon problem.
class AssemblyError : public std::logic_error {
public:
  explicit AssemblyError(const std::string& what) : std::logic_error(what) {}
};

/// Non-finite data fed to the condensing routine.
class CondensingError : public std::runtime_error {
public:
  explicit CondensingError(const std::string& what) : std::runtime_error(what) {}
};

/// Query time outside the scenario segment schedule.
class ScheduleError : public std::out_of_range {
public:
  explicit ScheduleError(const std::string& what) : std::out_of_range(what) {}
};

/// Run logs of different shapes passed to the aggregator.
class AggregationError : public std::invalid_argument {
public:
  explicit AggregationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid or inconsistent scenario configuration.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace relmpc
