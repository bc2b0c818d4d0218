#pragma once

#include <stdexcept>
#include <string>

namespace lmcf {

/// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  schema,         // 1
  numerical,      // 2
  invalid_input,  // 3
  audit,          // 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), kind_(kind), name_(std::move(name)) {}
  ErrorKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  ErrorKind kind_;
  std::string name_;
};

#define LMCF_DEFINE_ERROR(Name, Kind)                                          \
  struct Name : Error {                                                        \
    explicit Name(const std::string& w) : Error(ErrorKind::Kind, #Name, w) {} \
  };

LMCF_DEFINE_ERROR(PointOutsideChart, invalid_input)
LMCF_DEFINE_ERROR(UnknownModel, schema)
LMCF_DEFINE_ERROR(NotClosable, invalid_input)
LMCF_DEFINE_ERROR(ResolutionTooLow, invalid_input)
LMCF_DEFINE_ERROR(DegenerateMetric, numerical)
LMCF_DEFINE_ERROR(ProjectionFailed, numerical)
LMCF_DEFINE_ERROR(HolonomyObstruction, numerical)
LMCF_DEFINE_ERROR(EigSolveFailure, numerical)
LMCF_DEFINE_ERROR(NonExactMeanCurvature, invalid_input)
LMCF_DEFINE_ERROR(InitialDataNotExact, invalid_input)
LMCF_DEFINE_ERROR(StaleAngle, numerical)
LMCF_DEFINE_ERROR(CFLViolation, numerical)
LMCF_DEFINE_ERROR(NonFiniteState, numerical)
LMCF_DEFINE_ERROR(NotMinimal, invalid_input)
LMCF_DEFINE_ERROR(NonPositiveSeries, numerical)
LMCF_DEFINE_ERROR(InsufficientData, numerical)
LMCF_DEFINE_ERROR(SchemaError, schema)
LMCF_DEFINE_ERROR(FileNotFound, schema)

#undef LMCF_DEFINE_ERROR

}  // namespace lmcf
