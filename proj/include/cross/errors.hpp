#pragma once

#include <stdexcept>
#include <string>

namespace cross {

// Base for all recoverable engine errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rotation angle within 1e-6 of pi: the principal-branch tangent chart is
// invalid and the caller must treat the pair as out of chart.
struct AngleNearPi : Error {
  AngleNearPi() : Error("rotation angle too close to pi for log map") {}
};

// Fixed-point iteration failed to settle (pathological pose spread).
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& what) : Error(what) {}
};

// Mixture mass collapsed below representable range.
struct ZeroMass : Error {
  ZeroMass() : Error("mixture weight mass is zero") {}
};

// No usable measurement candidates this step.
struct EmptyCandidates : Error {
  EmptyCandidates() : Error("no measurement candidates") {}
};

struct UnknownNode : Error {
  explicit UnknownNode(int id) : Error("unknown map node " + std::to_string(id)) {}
};

struct EmptyGraph : Error {
  EmptyGraph() : Error("graph has no nodes") {}
};

// Motion/measurement pair cannot be expressed in a common chart.
struct ChartInvalid : Error {
  ChartInvalid() : Error("relative pose out of chart, fusion skipped") {}
};

// The tracked (null) hypothesis has been pruned.
struct NullDead : Error {
  NullDead() : Error("null hypothesis is dead, promote before testing odds") {}
};

struct SingularNormalEquations : Error {
  SingularNormalEquations() : Error("normal equations singular, damping exhausted") {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace cross
