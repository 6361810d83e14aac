#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nambu/systems.hpp"

namespace nambu {

enum class CheckKind {
  Conservation,
  ConstraintZero,
  PbTable,
  Final,
  Corollary,
  Homogeneous,
  Decomposition,
  DependentVanishing,
  FiN3,
  Reconstruction,
};

std::string_view check_kind_label(CheckKind kind);

struct RunConfig {
  std::uint64_t seed = 42;
  int samples = 100;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::string constraint_set;  // empty = every shipped set
  std::map<std::string, double> params;
};

struct CheckResult {
  std::string name;
  CheckKind kind = CheckKind::Conservation;
  int samples = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string provenance;  // PAPER / DERIVED / TRIVIAL
  std::string note;        // failure/skip reason, empty when clean
};

struct VerificationReport {
  struct Meta {
    std::string selector;
    std::uint64_t seed = 42;
    int samples = 100;
    double rtol = 1e-8;
    double atol = 1e-10;
    std::string constraint_set;
    std::map<std::string, double> params;
  };

  Meta meta;
  std::vector<CheckResult> checks;  // sorted by name

  bool all_pass() const;
  std::string to_text() const;
  std::string to_json() const;  // byte-stable for fixed inputs
};

/// Runs every registered identity check for the selector: a catalog name,
/// "all" (catalog plus the structural checks), "structural", or a system
/// file path.
VerificationReport run_suite(const std::string& selector,
                             const RunConfig& cfg);
VerificationReport run_suite(const MotionSystem& sys, const RunConfig& cfg);

struct BracketEvaluation {
  Complex value{};                    // Jacobian bracket of the arguments
  std::optional<Complex> prediction;  // C * {f,H}_P when the args match a
                                      // (f, 2n-1 family members) selection
  std::optional<double> residual;
};

/// Arguments resolve to family members, phase coordinates, or "f:<coord>".
/// Arity must be 2n.
BracketEvaluation eval_bracket(const MotionSystem& sys,
                               const std::vector<std::string>& args,
                               const Binding& phase_point,
                               std::string_view constraint_set = {});

/// Parses a bracket-table file: lines "<C-symbol> = <expr>", '#' comments.
std::map<std::string, Expr> parse_bracket_table(std::string_view contents);

struct ReconstructionOutcome {
  Expr reconstructed;
  std::optional<std::string> reference;       // functional compared against
  std::optional<double> max_partial_difference;
};

/// Reconstructs a constraint functional from a table of its partial
/// derivatives; gauge fixes F = 0 at the origin of C-space. When the
/// system ships a reference functional the partials are compared as
/// expanded polynomials.
ReconstructionOutcome reconstruct_from_table(const MotionSystem& sys,
                                             std::string_view table_contents);

/// Sparse random polynomial over vars: `terms` monomials of total degree
/// <= degree with coefficients in [-1, 1]. Deterministic in the generator
/// state.
Expr random_polynomial(std::mt19937_64& gen,
                       std::span<const std::string> vars, int degree,
                       int terms);

/// Shipped bracket tables (same content as the data/tables files).
std::string_view shipped_table(std::string_view system_name);

}  // namespace nambu
