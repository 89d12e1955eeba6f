#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geork/error.hpp"
#include "geork/integrator.hpp"

namespace geork {

class MethodParseError : public InvalidArgument {
 public:
  enum class Reason { unknown_kind, missing_parameter, invalid_combination, malformed };

  MethodParseError(Reason reason, const std::string& what) : InvalidArgument("cli", what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

/// Parses `gauss:s=3`, `hbvm:k=6,s=3`, `equip:s=3`. Kind and keys are
/// case-insensitive; parameters may come in any order.
MethodSpec parse_method(const std::string& spec);

/// Canonical string form; parse_method(format_method(m)) == m.
std::string format_method(const MethodSpec& m);

/// Splits "gauss:s=3,hbvm:k=6,s=3" into one string per method: a comma
/// starts a new method only when the next item carries a `kind:` prefix.
std::vector<std::string> split_method_list(const std::string& list);

enum class Subcommand { tableau, run, convergence, drift };
enum class Problem { kepler, quartic };

struct CliConfig {
  Subcommand subcommand = Subcommand::tableau;
  std::vector<MethodSpec> methods;
  Problem problem = Problem::kepler;
  std::optional<double> e;
  std::optional<double> h;
  std::optional<double> tol;
  std::optional<int> periods;
  std::optional<int> steps;
  std::optional<double> t_end;
  std::vector<int> steps_per_period;
  double alpha = 0.0;
  bool csv = false;
  std::string out;
  bool plot = false;
  int threads = 0;
  SolverConfig solver;
};

/// Executes a validated configuration; writes human-readable output to `out`.
/// Library errors propagate.
int dispatch(const CliConfig& cfg, std::ostream& out);

/// Full front end: parses argv, dispatches, and maps every error to a single
/// diagnostic line on `err`. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Thread cap from GEORK_THREADS (0 when unset or invalid).
int threads_from_env();

}  // namespace geork
