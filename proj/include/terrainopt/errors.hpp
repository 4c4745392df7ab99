#pragma once

#include <stdexcept>
#include <string>

namespace terrainopt {

enum class ErrorKind {
  InvalidArgument,
  NonFinite,
  DegenerateCloud,
  SolverDiverged,
  SingularJacobian,
  SingularHessian,
  DegenerateSupportPolygon,
  ZeroProjectedForce,
  InsufficientOrder,
  InfeasibleBox,
  ProjectionInfeasible,
  InnerSolverFailure,
  Io,
  Parse,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this type; `kind()` lets callers
// (the CLI in particular) map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DegenerateCloud: return "DegenerateCloud";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::SingularHessian: return "SingularHessian";
    case ErrorKind::DegenerateSupportPolygon: return "DegenerateSupportPolygon";
    case ErrorKind::ZeroProjectedForce: return "ZeroProjectedForce";
    case ErrorKind::InsufficientOrder: return "InsufficientOrder";
    case ErrorKind::InfeasibleBox: return "InfeasibleBox";
    case ErrorKind::ProjectionInfeasible: return "ProjectionInfeasible";
    case ErrorKind::InnerSolverFailure: return "InnerSolverFailure";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace terrainopt
