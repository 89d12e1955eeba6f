#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geork/error.hpp"
#include "geork/experiments.hpp"
#include "numfmt.hpp"

namespace geork {

using detail::format_g17;

namespace {

std::string k_field(const MethodSpec& m) { return m.k ? std::to_string(*m.k) : std::string(); }

std::string gp_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "''";
    else out += ch;
  }
  return out + "'";
}

}  // namespace

std::string format_step_csv(const std::vector<StepRecord>& records, const HamiltonianSystem& sys,
                            const State& initial) {
  const int m = sys.half_dim;
  const Invariant* h_inv = sys.find_invariant("H");
  const Invariant* l_inv = sys.find_invariant("L");
  const double h0 = h_inv ? h_inv->eval(initial.y) : 0.0;
  const double l0 = l_inv ? l_inv->eval(initial.y) : 0.0;

  std::ostringstream os;
  os << 't';
  for (int i = 1; i <= m; ++i) os << ",q" << i;
  for (int i = 1; i <= m; ++i) os << ",p" << i;
  os << ",h,alpha,stage_iters,err_H,err_L\n";
  for (const auto& r : records) {
    os << format_g17(r.state.t);
    for (Eigen::Index i = 0; i < r.state.y.size(); ++i) os << ',' << format_g17(r.state.y[i]);
    os << ',' << format_g17(r.h) << ',' << format_g17(r.alpha) << ',' << r.stage_iters << ',';
    if (h_inv) os << format_g17(h_inv->eval(r.state.y) - h0);
    os << ',';
    if (l_inv) os << format_g17(l_inv->eval(r.state.y) - l0);
    os << '\n';
  }
  return os.str();
}

std::string format_convergence_csv(const std::vector<ConvergenceResult>& results) {
  std::ostringstream os;
  os << "method,s,k,observable,h,error,floored\n";
  for (const auto& res : results) {
    for (const auto& s : res.samples) {
      os << kind_name(res.method.kind) << ',' << res.method.s << ',' << k_field(res.method) << ','
         << observable_name(res.observable) << ',' << format_g17(s.h) << ',' << format_g17(s.error) << ','
         << (s.floored ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

std::string format_drift_csv(const std::vector<DriftReport>& reports) {
  std::ostringstream os;
  os << "method,s,k,invariant,period,max_deviation\n";
  for (const auto& rep : reports) {
    for (std::size_t p = 0; p < rep.deviations.size(); ++p) {
      os << kind_name(rep.method.kind) << ',' << rep.method.s << ',' << k_field(rep.method) << ',' << rep.invariant
         << ',' << (p + 1) << ',' << format_g17(rep.deviations[p]) << '\n';
    }
  }
  for (const auto& rep : reports) {
    os << "# verdict: " << display_name(rep.method) << '/' << rep.invariant << '=' << verdict_name(rep.verdict)
       << " slope=" << format_g17(rep.drift_slope) << '\n';
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for " + path + ": " + ec.message());
  }
  const fs::path tmp = fs::path(path + ".partial");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("write failed for " + path);
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path);
  }
}

void write_step_csv(const std::vector<StepRecord>& records, const HamiltonianSystem& sys, const State& initial,
                    const std::string& path) {
  write_text_file(path, format_step_csv(records, sys, initial));
}

void write_convergence_csv(const std::vector<ConvergenceResult>& results, const std::string& path) {
  write_text_file(path, format_convergence_csv(results));
}

void write_drift_csv(const std::vector<DriftReport>& reports, const std::string& path) {
  write_text_file(path, format_drift_csv(reports));
}

std::string convergence_gnuplot(const std::string& csv_path, const std::vector<ConvergenceResult>& results) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set format y '10^{%L}'\n"
     << "set xlabel 'h'\n"
     << "set key left top\n";
  int page = 0;
  for (Observable o : {Observable::solution_error, Observable::energy_error, Observable::momentum_error}) {
    os << (page++ ? "pause -1\n" : "") << "set title " << gp_quote(observable_name(o)) << "\nplot ";
    bool first = true;
    for (const auto& r : results) {
      if (r.observable != o) continue;
      os << (first ? "" : ", \\\n     ") << gp_quote(csv_path) << " using ((strcol(1) eq "
         << gp_quote(kind_name(r.method.kind)) << " && strcol(3) eq " << gp_quote(k_field(r.method))
         << " && strcol(4) eq " << gp_quote(observable_name(o)) << ") ? $5 : NaN):6 with linespoints title "
         << gp_quote(display_name(r.method));
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

std::string drift_gnuplot(const std::string& csv_path, const std::vector<DriftReport>& reports) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set xlabel 'period'\n"
     << "set ylabel 'max deviation'\n"
     << "set key left top\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    os << (i ? "pause -1\n" : "") << "set title " << gp_quote(display_name(r.method) + " " + r.invariant + " ("
                                                              + verdict_name(r.verdict) + ")")
       << "\nplot " << gp_quote(csv_path) << " using ((strcol(1) eq " << gp_quote(kind_name(r.method.kind))
       << " && strcol(3) eq " << gp_quote(k_field(r.method)) << " && strcol(4) eq " << gp_quote(r.invariant)
       << ") ? $5 : NaN):6 with linespoints notitle\n";
  }
  return os.str();
}

std::string steps_gnuplot(const std::string& csv_path, const HamiltonianSystem& sys) {
  const int m = sys.half_dim;
  const int err_h_col = 1 + 2 * m + 4;
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 't'\n"
     << "plot " << gp_quote(csv_path) << " using 1:" << err_h_col << " with lines";
  if (sys.find_invariant("L")) os << ", '' using 1:" << err_h_col + 1 << " with lines";
  os << '\n';
  return os.str();
}

}  // namespace geork
