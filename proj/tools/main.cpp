#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nambu/harness.hpp"

namespace {

std::map<std::string, double> parse_params(
    const std::vector<std::string>& raw) {
  std::map<std::string, double> params;
  for (const auto& p : raw) {
    auto eq = p.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--param", "expected name=value, got " + p);
    params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
  }
  return params;
}

nambu::Binding parse_point(const std::string& at) {
  nambu::Binding b;
  std::istringstream in(at);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--at", "expected name=value, got " + item);
    b[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return b;
}

nambu::MotionSystem resolve_system(const std::string& selector,
                                   const std::map<std::string, double>& params) {
  for (const char* name : nambu::kBuiltinNames)
    if (selector == name) return nambu::builtin(selector, "", params);
  std::ifstream in(selector);
  if (!in)
    throw nambu::SystemFormatError("unknown system or file '" + selector +
                                   "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return nambu::load_system(buf.str(), params);
}

std::string fmt_complex(nambu::Complex v) {
  std::ostringstream out;
  out.precision(15);
  if (v.imag() == 0.0) {
    out << v.real();
  } else {
    out << v.real() << (v.imag() < 0 ? " - " : " + ")
        << std::abs(v.imag()) << "i";
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normalization constants for canonical Nambu brackets"};
  app.require_subcommand(1);

  // verify ----------------------------------------------------------------
  auto* verify = app.add_subcommand(
      "verify", "Run the identity-verification suite");
  std::string v_system = "all";
  nambu::RunConfig cfg;
  std::string format = "text";
  std::vector<std::string> raw_params;
  verify->add_option("--system", v_system,
                     "Catalog name, system file, 'structural' or 'all'");
  verify->add_option("--constraint-set", cfg.constraint_set,
                     "Restrict to one constraint set label");
  verify->add_option("--samples", cfg.samples, "Sample points per check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", cfg.seed, "Sampling seed");
  verify->add_option("--rtol", cfg.rtol, "Residual tolerance");
  verify->add_option("--atol", cfg.atol, "Absolute tolerance");
  verify->add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "json"}));
  verify->add_option("--param", raw_params, "Parameter override name=value");

  // bracket ---------------------------------------------------------------
  auto* bracket = app.add_subcommand(
      "bracket", "Evaluate one Jacobian bracket at a point");
  std::string b_system, b_args, b_at, b_set;
  std::uint64_t b_seed = 42;
  bracket->add_option("--system", b_system, "Catalog name or system file")
      ->required();
  bracket->add_option("--args", b_args,
                      "Comma list of constants, coordinates or f:<coord>")
      ->required();
  bracket->add_option("--seed", b_seed, "Seed for the sampled point");
  bracket->add_option("--at", b_at, "Explicit point q1=...,p1=...,...");
  bracket->add_option("--constraint-set", b_set, "Constraint set label");
  bracket->add_option("--param", raw_params, "Parameter override name=value");

  // reconstruct -----------------------------------------------------------
  auto* reconstruct = app.add_subcommand(
      "reconstruct", "Rebuild a constraint functional from a bracket table");
  std::string r_system, r_table;
  reconstruct->add_option("--system", r_system, "Catalog name or system file")
      ->required();
  reconstruct->add_option("--table", r_table, "Bracket table file")
      ->required();
  reconstruct->add_option("--param", raw_params,
                          "Parameter override name=value");

  // list ------------------------------------------------------------------
  auto* list = app.add_subcommand("list", "Print the system catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      cfg.params = parse_params(raw_params);
      nambu::VerificationReport report = nambu::run_suite(v_system, cfg);
      std::cout << (format == "json" ? report.to_json() : report.to_text());
      return report.all_pass() ? 0 : 1;
    }

    if (*bracket) {
      nambu::MotionSystem sys =
          resolve_system(b_system, parse_params(raw_params));
      std::vector<std::string> args;
      std::istringstream in(b_args);
      std::string item;
      while (std::getline(in, item, ',')) args.push_back(item);

      nambu::Binding point;
      if (!b_at.empty())
        point = parse_point(b_at);
      else
        point = nambu::sample(sys, b_seed, 1).front().phase;

      auto result = nambu::eval_bracket(sys, args, point, b_set);
      std::cout << "value = " << fmt_complex(result.value) << "\n";
      if (result.prediction) {
        std::cout << "prediction (C * df/dt) = "
                  << fmt_complex(*result.prediction) << "\n";
        std::cout << "residual = " << *result.residual << "\n";
      }
      return 0;
    }

    if (*reconstruct) {
      nambu::MotionSystem sys =
          resolve_system(r_system, parse_params(raw_params));
      std::ifstream in(r_table);
      if (!in) {
        std::cerr << "error: cannot open table file '" << r_table << "'\n";
        return 2;
      }
      std::stringstream buf;
      buf << in.rdbuf();
      auto outcome = nambu::reconstruct_from_table(sys, buf.str());
      std::cout << "F = " << nambu::to_string(outcome.reconstructed) << "\n";
      if (outcome.reference)
        std::cout << "max partial difference vs " << *outcome.reference
                  << " = " << *outcome.max_partial_difference << "\n";
      return 0;
    }

    if (*list) {
      std::printf("%-24s %4s %4s %4s  %s\n", "system", "n", "m", "s",
                  "constraint sets");
      for (const char* name : nambu::kBuiltinNames) {
        nambu::MotionSystem sys = nambu::builtin(name);
        std::string sets;
        for (const auto& cs : sys.constraint_sets) {
          if (!sets.empty()) sets += ", ";
          sets += cs.label + " (s=" + std::to_string(cs.size()) + ")";
        }
        std::printf("%-24s %4d %4zu %4zu  %s\n", name, sys.phase_space.dof,
                    sys.family.size(), sys.constraint_sets.front().size(),
                    sets.c_str());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
