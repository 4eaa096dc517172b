#include "confdi/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace confdi {

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int parse_int(const std::string& s, const std::string& what) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) throw InvalidInput("bad " + what + ": '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& what) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) throw InvalidInput("bad " + what + ": '" + s + "'");
  return v;
}

}  // namespace

WeightedDigraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n = -1;
  std::vector<Arc> arcs;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> t = tokens(line);
    if (n < 0) {
      if (t.size() != 2 || t[0] != "N")
        throw InvalidInput("graph file must start with 'N <n>'");
      n = parse_int(t[1], "vertex count");
      continue;
    }
    if (t.size() != 3) throw InvalidInput("arc line needs '<tail> <head> <weight>'");
    arcs.push_back({parse_int(t[0], "tail"), parse_int(t[1], "head"),
                    parse_real(t[2], "weight")});
  }
  if (n < 0) throw InvalidInput("graph file has no 'N <n>' line");
  return WeightedDigraph(n, std::move(arcs));
}

WeightedDigraph read_graph(const std::string& path) {
  return parse_graph(read_all(path));
}

std::string serialize_graph(const WeightedDigraph& g) {
  std::string out = "N " + std::to_string(g.size()) + "\n";
  for (const Arc& a : g.arcs())
    out += std::to_string(a.tail) + " " + std::to_string(a.head) + " " +
           format_double(a.weight) + "\n";
  return out;
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig c;
  std::istringstream in(text);
  std::string line;
  std::vector<double> x0;
  bool have_kappa = false, have_horizon = false;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("expected 'key = value': " + line);
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key == "graph") {
      c.graph_path = value;
    } else if (key == "kappa") {
      c.kappa = parse_real(value, "kappa");
      have_kappa = true;
    } else if (key == "x0") {
      for (const std::string& t : tokens(value))
        x0.push_back(parse_real(t, "x0 entry"));
    } else if (key == "horizon") {
      c.horizon = parse_int(value, "horizon");
      have_horizon = true;
    } else if (key == "observed") {
      for (const std::string& t : tokens(value))
        c.observed.push_back(parse_int(t, "observed vertex"));
    } else if (key == "eps") {
      c.eps = parse_real(value, "eps");
    } else if (key == "fault") {
      std::vector<std::string> t = tokens(value);
      if (t.size() != 4)
        throw InvalidInput("fault needs 't_start t_end tail head'");
      FaultInterval f;
      f.t_start = parse_int(t[0], "fault start");
      if (t[1] != "inf") f.t_end = parse_int(t[1], "fault end");
      f.tail = parse_int(t[2], "fault tail");
      f.head = parse_int(t[3], "fault head");
      if (f.t_start < 1 || (f.t_end && *f.t_end < f.t_start))
        throw InvalidInput("fault interval must satisfy 1 <= start <= end");
      c.faults.push_back(f);
    } else if (key == "out_trajectory") {
      c.out_trajectory = value;
    } else if (key == "out_residuals") {
      c.out_residuals = value;
    } else if (key == "out_audit") {
      c.out_audit = value;
    } else {
      throw InvalidInput("unknown config key: " + key);
    }
  }
  if (c.graph_path.empty()) throw InvalidInput("config missing 'graph'");
  if (!have_kappa) throw InvalidInput("config missing 'kappa'");
  if (!have_horizon) throw InvalidInput("config missing 'horizon'");
  if (x0.empty()) throw InvalidInput("config missing 'x0'");
  c.x0 = Eigen::Map<Eigen::VectorXd>(x0.data(), static_cast<int>(x0.size()));
  for (size_t i = 1; i < c.faults.size(); ++i) {
    int prev_end = c.faults[i - 1].t_end ? *c.faults[i - 1].t_end
                                         : std::numeric_limits<int>::max();
    if (c.faults[i].t_start <= prev_end)
      throw InvalidInput("fault intervals must be disjoint and ordered");
  }
  return c;
}

ScenarioConfig read_scenario(const std::string& path) {
  return parse_scenario(read_all(path));
}

std::string serialize_scenario(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "graph = " << c.graph_path << "\n";
  out << "kappa = " << format_double(c.kappa) << "\n";
  out << "x0 =";
  for (int i = 0; i < c.x0.size(); ++i) out << " " << format_double(c.x0(i));
  out << "\n";
  out << "horizon = " << c.horizon << "\n";
  if (!c.observed.empty()) {
    out << "observed =";
    for (int v : c.observed) out << " " << v;
    out << "\n";
  }
  out << "eps = " << format_double(c.eps) << "\n";
  for (const FaultInterval& f : c.faults) {
    out << "fault = " << f.t_start << " "
        << (f.t_end ? std::to_string(*f.t_end) : std::string("inf")) << " "
        << f.tail << " " << f.head << "\n";
  }
  if (!c.out_trajectory.empty())
    out << "out_trajectory = " << c.out_trajectory << "\n";
  if (!c.out_residuals.empty())
    out << "out_residuals = " << c.out_residuals << "\n";
  if (!c.out_audit.empty()) out << "out_audit = " << c.out_audit << "\n";
  return out.str();
}

FaultSchedule to_schedule(const WeightedDigraph& base,
                          const std::vector<FaultInterval>& faults) {
  std::vector<FaultEvent> events;
  for (const FaultInterval& f : faults) {
    events.push_back({f.t_start - 1, FaultAction::Disconnect, f.tail, f.head});
    if (f.t_end)
      events.push_back({*f.t_end, FaultAction::Restore, f.tail, f.head});
  }
  return FaultSchedule(base, std::move(events));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  out << ",matrix_tag\n";
  for (size_t t = 0; t < traj.states.size(); ++t) {
    out << t;
    for (int i = 0; i < n; ++i) out << "," << format_double(traj.states[t](i));
    out << "," << traj.matrix_tags[t] << "\n";
  }
  return out.str();
}

std::string audit_csv(const std::vector<AuditEntry>& entries,
                      ObservationMode mode) {
  std::ostringstream out;
  const char* mode_name = mode == ObservationMode::FullState ? "full" : "partial";
  out << "tail,head,mode,discernible,shared_eigenvalues,margin\n";
  for (const AuditEntry& e : entries) {
    out << e.arc.tail << "," << e.arc.head << "," << mode_name << ",";
    if (!e.verdict) {
      // No verdict; the status string takes the discernible slot.
      out << e.status << ",,\n";
      continue;
    }
    out << (e.verdict->discernible ? 1 : 0) << ",";
    for (size_t i = 0; i < e.verdict->shared_spectrum.size(); ++i) {
      std::complex<double> v = e.verdict->shared_spectrum[i];
      if (i) out << ";";
      out << format_double(v.real());
      if (v.imag() != 0.0) out << "+" << format_double(v.imag()) << "i";
    }
    out << "," << format_double(e.verdict->margin) << "\n";
  }
  return out.str();
}

std::string residual_csv(const std::vector<ResidualRow>& rows) {
  std::ostringstream out;
  out << "t,residual_norm,detected,head_candidate,c_value,tail_candidates\n";
  for (const ResidualRow& r : rows) {
    out << r.t << "," << format_double(r.norm) << "," << (r.detected ? 1 : 0)
        << ",";
    if (r.head) out << *r.head;
    out << ",";
    if (r.c_value) out << format_double(*r.c_value);
    out << ",";
    for (size_t i = 0; i < r.tail_candidates.size(); ++i) {
      if (i) out << ";";
      out << r.tail_candidates[i];
    }
    out << "\n";
  }
  return out.str();
}

std::string observer_csv(const ObserverRun& run, int p) {
  std::ostringstream out;
  const int n =
      run.xhat_states.empty() ? 0 : static_cast<int>(run.xhat_states[0].size());
  out << "t";
  for (int i = 1; i <= p; ++i) out << ",y" << i;
  for (int i = 1; i <= n; ++i) out << ",xhat" << i;
  out << ",residual_norm,d\n";
  for (size_t t = 0; t < run.residuals.size(); ++t) {
    out << t;
    // y = [I_p 0] xhat - r, recovered from the stored run.
    for (int i = 0; i < p; ++i)
      out << ","
          << format_double(run.xhat_states[t](i) - run.residuals[t](i));
    for (int i = 0; i < n; ++i)
      out << "," << format_double(run.xhat_states[t](i));
    out << "," << format_double(run.residuals[t].cwiseAbs().maxCoeff()) << ","
        << (run.detection_signal[t] ? 1 : 0) << "\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << content;
}

}  // namespace confdi
