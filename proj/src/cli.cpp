#include "geork/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "geork/experiments.hpp"
#include "numfmt.hpp"

namespace geork {
namespace {

using Reason = MethodParseError::Reason;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

int parse_positive(const std::string& key, const std::string& value, const std::string& spec) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || v < 1) {
    throw MethodParseError(Reason::malformed, "method '" + spec + "': " + key + " must be a positive integer");
  }
  return v;
}

std::string subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::tableau: return "tableau";
    case Subcommand::run: return "run";
    case Subcommand::convergence: return "convergence";
    case Subcommand::drift: return "drift";
  }
  return "?";
}

std::string method_list(const std::vector<MethodSpec>& ms) {
  std::string s;
  for (const auto& m : ms) s += (s.empty() ? "" : " ") + format_method(m);
  return s;
}

std::string g17(double x) { return detail::format_g17(x); }

std::string short_num(double x) {
  std::ostringstream os;
  os << std::setprecision(4) << x;
  return os.str();
}

int dispatch_tableau(const CliConfig& cfg, std::ostream& out) {
  for (const auto& m : cfg.methods) {
    const ButcherTableau t = build_tableau(m, cfg.alpha);
    out << (cfg.csv ? format_tableau_csv(t) : format_tableau(t));
  }
  return 0;
}

int dispatch_run(const CliConfig& cfg, std::ostream& out) {
  const MethodSpec& method = cfg.methods.front();
  auto [sys, y0] = cfg.problem == Problem::kepler ? kepler_system(cfg.e.value_or(0.6)) : quartic_oscillator();

  std::vector<StepRecord> steps;
  if (cfg.tol) {
    double t_end = 0.0;
    if (cfg.t_end) {
      t_end = *cfg.t_end;
    } else if (cfg.periods && sys.period) {
      t_end = *cfg.periods * *sys.period;
    } else {
      throw InvalidArgument("cli", "adaptive run needs --t-end (or --periods for a periodic problem)");
    }
    AdaptiveRun run = integrate_adaptive(method, sys, y0, t_end, *cfg.tol, cfg.solver);
    for (auto& r : run.steps) {
      if (r.accepted) steps.push_back(std::move(r));
    }
    out << display_name(method) << " adaptive: " << run.n_accepted << " accepted, " << run.n_rejected
        << " rejected steps\n";
  } else {
    const double h = cfg.h.value_or(0.01);
    int n = cfg.steps.value_or(1000);
    if (!cfg.steps && cfg.periods && sys.period) {
      n = static_cast<int>(std::llround(*cfg.periods * *sys.period / h));
    }
    steps = integrate_fixed(method, sys, y0, h, n, cfg.solver);
    out << display_name(method) << " fixed step h=" << g17(h) << ": " << n << " steps\n";
  }

  double max_dh = 0.0;
  const double h0 = sys.energy(y0.y);
  for (const auto& r : steps) max_dh = std::max(max_dh, std::abs(sys.energy(r.state.y) - h0));
  out << "max |H - H0| = " << g17(max_dh) << '\n';

  const std::string csv = cfg.out + ".csv";
  write_step_csv(steps, sys, y0, csv);
  out << "wrote " << csv << '\n';
  if (cfg.plot) {
    write_text_file(cfg.out + ".gp", steps_gnuplot(csv, sys));
    out << "wrote " << cfg.out << ".gp\n";
  }
  return 0;
}

int dispatch_convergence(const CliConfig& cfg, std::ostream& out) {
  ConvergenceConfig cc;
  cc.e = cfg.e.value_or(0.6);
  cc.periods = cfg.periods.value_or(10);
  if (!cfg.steps_per_period.empty()) cc.steps_per_period = cfg.steps_per_period;
  cc.solver = cfg.solver;
  cc.threads = cfg.threads;
  const auto results = convergence_study(cfg.methods, cc);

  out << "Kepler e=" << cc.e << ", " << cc.periods << " periods\n";
  out << std::left << std::setw(12) << "method" << std::setw(16) << "observable" << std::setw(10) << "slope"
      << "constant(slope=2s)\n";
  for (const auto& r : results) {
    out << std::left << std::setw(12) << display_name(r.method) << std::setw(16) << observable_name(r.observable);
    if (r.fitted) {
      out << std::setw(10) << short_num(r.slope) << short_num(r.pinned_constant) << '\n';
    } else {
      out << "at round-off floor\n";
    }
  }
  const std::string csv = cfg.out + ".csv";
  write_convergence_csv(results, csv);
  out << "wrote " << csv << '\n';
  if (cfg.plot) {
    write_text_file(cfg.out + ".gp", convergence_gnuplot(csv, results));
    out << "wrote " << cfg.out << ".gp\n";
  }
  return 0;
}

int dispatch_drift(const CliConfig& cfg, std::ostream& out) {
  DriftConfig dc;
  dc.e = cfg.e.value_or(0.99);
  dc.tol = cfg.tol.value_or(1e-8);
  dc.periods = cfg.periods.value_or(20);
  dc.solver = cfg.solver;
  dc.threads = cfg.threads;
  const DriftStudy study = drift_study(cfg.methods, dc);

  out << "Kepler e=" << dc.e << ", tol=" << dc.tol << ", " << dc.periods << " periods\n";
  for (const auto& r : study.reports) {
    out << "  " << std::left << std::setw(12) << display_name(r.method) << std::setw(3) << r.invariant
        << std::setw(10) << verdict_name(r.verdict) << "final deviation " << short_num(r.deviations.back())
        << ", slope " << short_num(r.drift_slope) << " per period\n";
  }
  for (const auto& s : study.stats) {
    out << "  " << std::left << std::setw(12) << display_name(s.method) << "steps " << s.accepted << " accepted, "
        << s.rejected << " rejected, " << s.flagged << " flagged; h in [" << short_num(s.h_min) << ", "
        << short_num(s.h_max) << "]\n";
  }
  const std::string csv = cfg.out + ".csv";
  write_drift_csv(study.reports, csv);
  out << "wrote " << csv << '\n';
  if (cfg.plot) {
    write_text_file(cfg.out + ".gp", drift_gnuplot(csv, study.reports));
    out << "wrote " << cfg.out << ".gp\n";
  }
  return 0;
}

std::vector<MethodSpec> parse_method_list(const std::string& list) {
  std::vector<MethodSpec> out;
  for (const auto& item : split_method_list(list)) out.push_back(parse_method(item));
  if (out.empty()) throw InvalidArgument("cli", "empty method list");
  return out;
}

}  // namespace

MethodSpec parse_method(const std::string& spec) {
  const std::string text = trim(spec);
  const auto colon = text.find(':');
  const std::string kind_text = lower(trim(text.substr(0, colon)));

  MethodSpec m;
  if (kind_text == "gauss") {
    m.kind = MethodKind::gauss;
  } else if (kind_text == "hbvm") {
    m.kind = MethodKind::hbvm;
  } else if (kind_text == "equip") {
    m.kind = MethodKind::equip;
  } else {
    throw MethodParseError(Reason::unknown_kind, "method '" + spec + "': unknown kind '" + kind_text + "'");
  }

  std::map<std::string, int> params;
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      item = trim(item);
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw MethodParseError(Reason::malformed, "method '" + spec + "': expected key=value, got '" + item + "'");
      }
      const std::string key = lower(trim(item.substr(0, eq)));
      if (key != "s" && key != "k") {
        throw MethodParseError(Reason::malformed, "method '" + spec + "': unknown parameter '" + key + "'");
      }
      if (params.count(key)) {
        throw MethodParseError(Reason::malformed, "method '" + spec + "': parameter '" + key + "' repeated");
      }
      params[key] = parse_positive(key, trim(item.substr(eq + 1)), spec);
    }
  }

  if (!params.count("s")) throw MethodParseError(Reason::missing_parameter, "method '" + spec + "': missing s");
  m.s = params["s"];
  if (m.kind == MethodKind::hbvm) {
    if (!params.count("k")) throw MethodParseError(Reason::missing_parameter, "method '" + spec + "': hbvm needs k");
    m.k = params["k"];
    if (*m.k < m.s) {
      throw MethodParseError(Reason::invalid_combination, "method '" + spec + "': hbvm requires k >= s");
    }
  } else if (params.count("k")) {
    throw MethodParseError(Reason::invalid_combination,
                           "method '" + spec + "': k is only valid for hbvm");
  }
  try {
    validate(m);
  } catch (const InvalidArgument& e) {
    throw MethodParseError(Reason::invalid_combination, "method '" + spec + "': " + e.what());
  }
  return m;
}

std::string format_method(const MethodSpec& m) {
  std::string s = kind_name(m.kind) + ":";
  if (m.k) s += "k=" + std::to_string(*m.k) + ",";
  return s + "s=" + std::to_string(m.s);
}

std::vector<std::string> split_method_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item.find(':') != std::string::npos || out.empty()) {
      out.push_back(item);
    } else {
      out.back() += "," + item;
    }
  }
  return out;
}

int threads_from_env() {
  const char* v = std::getenv("GEORK_THREADS");
  if (!v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 0) return 0;
  return static_cast<int>(std::min(n, 256L));
}

int dispatch(const CliConfig& cfg, std::ostream& out) {
  if (cfg.methods.empty()) throw InvalidArgument("cli", "no method given");
  switch (cfg.subcommand) {
    case Subcommand::tableau: return dispatch_tableau(cfg, out);
    case Subcommand::run: return dispatch_run(cfg, out);
    case Subcommand::convergence: return dispatch_convergence(cfg, out);
    case Subcommand::drift: return dispatch_drift(cfg, out);
  }
  return 1;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gauss, HBVM and EQUIP Runge-Kutta integrators for Hamiltonian problems", "geork"};
  app.require_subcommand(1);

  CliConfig cfg;
  std::string method_text;
  std::string methods_text;
  std::string problem_text = "kepler";
  std::string strategy_text = "fixed_point";

  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--stage-tol", cfg.solver.stage_tol, "stage iteration tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--strategy", strategy_text, "stage solver: fixed_point or newton")
        ->check(CLI::IsMember({"fixed_point", "newton"}));
  };

  auto* tableau = app.add_subcommand("tableau", "print a Butcher tableau");
  tableau->add_option("--method", method_text, "method, e.g. hbvm:k=6,s=3")->required();
  tableau->add_option("--alpha", cfg.alpha, "EQUIP parameter");
  tableau->add_flag("--csv", cfg.csv, "machine-readable output");

  auto* run = app.add_subcommand("run", "integrate one problem and write the step CSV");
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("--method", method_text, "method")->default_str("gauss:s=3");
  run->add_option("--problem", problem_text, "kepler or quartic")->check(CLI::IsMember({"kepler", "quartic"}));
  run->add_option("--e", cfg.e, "Kepler eccentricity");
  auto* run_h = run->add_option("--h", cfg.h, "constant stepsize")->check(CLI::PositiveNumber);
  auto* run_tol = run->add_option("--tol", cfg.tol, "adaptive tolerance")->check(CLI::PositiveNumber);
  run_h->excludes(run_tol);
  run->add_option("--steps", cfg.steps, "number of fixed steps")->check(CLI::PositiveNumber);
  run->add_option("--periods", cfg.periods, "integration span in periods")->check(CLI::PositiveNumber);
  run->add_option("--t-end", cfg.t_end, "final time (adaptive)")->check(CLI::PositiveNumber);
  run->add_option("--out", cfg.out, "output path prefix")->default_str("run");
  run->add_flag("--plot", cfg.plot, "also write a gnuplot script");
  add_solver(run);

  auto* conv = app.add_subcommand("convergence", "fixed-step Kepler convergence study");
  conv->add_option("--methods", methods_text, "comma separated methods");
  conv->add_option("--e", cfg.e, "eccentricity (default 0.6)");
  conv->add_option("--periods", cfg.periods, "periods (default 10)")->check(CLI::PositiveNumber);
  conv->add_option("--steps-per-period", cfg.steps_per_period, "stepsize grid as steps per period")
      ->delimiter(',');
  conv->add_option("--out", cfg.out, "output path prefix")->default_str("convergence");
  conv->add_flag("--plot", cfg.plot, "also write a gnuplot script");
  add_solver(conv);

  auto* drift = app.add_subcommand("drift", "adaptive-step Kepler invariant drift study");
  drift->add_option("--methods", methods_text, "comma separated methods");
  drift->add_option("--e", cfg.e, "eccentricity (default 0.99)");
  drift->add_option("--tol", cfg.tol, "controller tolerance (default 1e-8)")->check(CLI::PositiveNumber);
  drift->add_option("--periods", cfg.periods, "periods (default 20)")->check(CLI::PositiveNumber);
  drift->add_option("--out", cfg.out, "output path prefix")->default_str("drift");
  drift->add_flag("--plot", cfg.plot, "also write a gnuplot script");
  add_solver(drift);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "geork: " << e.what() << '\n';
    return 2;
  }

  std::string sub_name = "geork";
  std::string context;
  try {
    if (tableau->parsed()) {
      cfg.subcommand = Subcommand::tableau;
    } else if (run->parsed()) {
      cfg.subcommand = Subcommand::run;
    } else if (conv->parsed()) {
      cfg.subcommand = Subcommand::convergence;
    } else {
      cfg.subcommand = Subcommand::drift;
    }
    sub_name = subcommand_name(cfg.subcommand);
    if (cfg.out.empty()) cfg.out = sub_name == "tableau" ? "" : sub_name;

    if (cfg.subcommand == Subcommand::tableau || cfg.subcommand == Subcommand::run) {
      if (method_text.empty()) method_text = "gauss:s=3";
      context = "--method " + method_text;
      cfg.methods = {parse_method(method_text)};
    } else {
      if (methods_text.empty()) {
        methods_text = cfg.subcommand == Subcommand::convergence
                           ? "gauss:s=3,hbvm:k=4,s=3,hbvm:k=6,s=3,hbvm:k=9,s=3,hbvm:k=12,s=3,equip:s=3"
                           : "gauss:s=3,hbvm:k=12,s=3,equip:s=3";
      }
      context = "--methods " + methods_text;
      cfg.methods = parse_method_list(methods_text);
    }
    cfg.problem = problem_text == "quartic" ? Problem::quartic : Problem::kepler;
    cfg.solver.strategy = strategy_text == "newton" ? StageStrategy::simplified_newton : StageStrategy::fixed_point;
    cfg.threads = threads_from_env();

    if (cfg.subcommand != Subcommand::tableau) context = method_list(cfg.methods);
    if (cfg.e) context += ", e=" + short_num(*cfg.e);
    if (cfg.h) context += ", h=" + short_num(*cfg.h);
    if (cfg.tol) context += ", tol=" + short_num(*cfg.tol);
    if (cfg.periods) context += ", periods=" + std::to_string(*cfg.periods);
    return dispatch(cfg, out);
  } catch (const Error& e) {
    err << "geork " << sub_name << ": [" << e.module() << "] " << e.what() << " (" << context << ")\n";
    return 1;
  } catch (const std::exception& e) {
    err << "geork " << sub_name << ": " << e.what() << " (" << context << ")\n";
    return 1;
  }
}

}  // namespace geork
