#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nambu/constraints.hpp"

namespace nambu {

struct SystemFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sampling-time lower bound on |expression|, keeping points away from
/// singularities (coordinate zeros, sphere boundary, ...).
struct Guard {
  Expr expression;
  double min_abs = 0.1;
};

struct SamplingBox {
  double lo = -2.0;
  double hi = 2.0;
};

struct MotionSystem {
  std::string name;
  PhaseSpace phase_space;
  std::map<std::string, double> parameters;
  ConstantFamily family;
  std::vector<ConstraintSet> constraint_sets;  // first one is the default
  std::vector<Guard> guards;
  std::map<std::string, SamplingBox> boxes;  // per coordinate; default [-2,2]
  /// Functional to compare reconstructed constraints against, when shipped.
  std::optional<std::string> reconstruction_reference;

  const ConstraintSet& constraint_set(std::string_view label = {}) const;
  SamplingBox box(const std::string& coordinate) const;
};

struct SamplePoint {
  Binding phase;      // coordinates plus parameters
  Binding constants;  // C-symbols plus parameters
};

inline constexpr const char* kBuiltinNames[] = {
    "harmonic-oscillator", "smorodinsky-winternitz", "kepler-coulomb",
    "winternitz-3", "sphere-4"};

/// Builds one of the five catalog systems. The harmonic oscillator also
/// supports the variants "extended-6" (adds C6 = C2-C3 with F3),
/// "extended-7" (further adds C7 = C4*C5 with F4) and "no-hamiltonian"
/// (family C2..C5 with the single constraint F = -F2).
MotionSystem builtin(std::string_view name, std::string_view variant = "",
                     const std::map<std::string, double>& param_overrides = {});

/// Parses a system definition in the line-oriented text format.
MotionSystem load_system(std::string_view contents,
                         const std::map<std::string, double>& param_overrides = {});

/// Serializes a system back into the text format (guards, boxes and all
/// constraint sets included; variant families are not representable).
std::string to_system_file(const MotionSystem& sys);

/// Deterministic guarded rejection sampling: coordinates uniform in their
/// boxes, accepted when every guard has |g(x)| >= its bound; at most
/// 10000 rejections per point before SamplingError.
std::vector<SamplePoint> sample(const MotionSystem& sys, std::uint64_t seed,
                                int count);

/// C-symbol values (plus parameters) at one phase point.
Binding constants_at(const MotionSystem& sys, const Binding& phase_point);

}  // namespace nambu
