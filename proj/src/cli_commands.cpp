#include "distil/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "distil/certificates.hpp"
#include "distil/protocols.hpp"
#include "distil/seesaw.hpp"

namespace distil::cli {

// ---------------------------------------------------------------- rows

std::string csv_header() { return "method,delta,bound_or_fidelity,dual_gap,status,source_spec"; }

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string to_csv(const std::vector<Row>& rows) {
  std::string s = csv_header() + "\n";
  for (const auto& r : rows)
    s += csv_field(r.method) + "," + format_double(r.delta) + "," + format_double(r.value) + "," +
         format_double(r.dual_gap) + "," + csv_field(r.status) + "," + csv_field(r.source) + "\n";
  return s;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> f{""};
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') f.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else f.back() += c;
    } else if (c == '"') quoted = true;
    else if (c == ',') f.emplace_back();
    else f.back() += c;
  }
  return f;
}

}  // namespace

std::vector<Row> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw std::invalid_argument("unexpected CSV header");
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 6) throw std::invalid_argument("CSV row needs 6 fields: " + line);
    rows.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), f[4], f[5]});
  }
  return rows;
}

nlohmann::json to_json(const std::vector<Row>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows)
    a.push_back({{"method", r.method}, {"delta", r.delta}, {"bound_or_fidelity", r.value},
                 {"dual_gap", r.dual_gap}, {"status", r.status}, {"source_spec", r.source}});
  return a;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() != 3) throw std::invalid_argument("grid must look like a:b:n, got '" + text + "'");
  double a = std::stod(parts[0]), b = std::stod(parts[1]);
  int n = std::stoi(parts[2]);
  if (n < 1) throw std::invalid_argument("grid count must be >= 1");
  if (!(a >= 0 && a <= b && b <= 1 && b > 0)) throw std::invalid_argument("grid must lie in (0, 1] with a <= b");
  if (a == 0 && n == 1) return {b};
  auto g = make_grid(a, b, n);
  for (double d : g)
    if (!(d > 0)) throw std::invalid_argument("grid points must be positive");
  return g;
}

// ---------------------------------------------------------------- sweeps

namespace {

Row bound_row(const BoundResult& r, double delta, const std::string& spec) {
  return {to_string(r.method), delta, r.value, r.dual_gap, r.status, spec};
}

std::vector<Row> bound_rows(BoundMethod m, const Operator& rho, int D, const std::vector<double>& grid,
                            const Globals& g, const std::string& spec) {
  BoundOptions o;
  o.tol = g.tol;
  auto res = fidelity_bound_sweep(m, rho, D, grid, std::max(1, g.jobs), o);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back(bound_row(res[i], grid[i], spec));
  return rows;
}

std::vector<Row> curve_rows(const std::vector<CurvePoint>& c, const std::string& spec) {
  std::vector<Row> rows;
  for (const auto& p : c) rows.push_back({p.source, p.delta, p.fidelity, 0.0, "achievable", spec});
  return rows;
}

}  // namespace

std::vector<Row> run_sweep(const SweepJob& job, const Globals& g) {
  if (job.grid.empty()) throw std::invalid_argument("sweep grid is empty");
  if (job.methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  Operator rho = make_state(job.state);
  std::string spec = to_string(job.state);
  std::vector<Row> rows;
  for (auto m : job.methods) {
    auto r = bound_rows(m, rho, job.D, job.grid, g, spec);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

int exit_code_for(const std::vector<Row>& rows) {
  bool infeasible = false;
  for (const auto& r : rows) {
    if (r.status == "solver-failure" || r.status == "unbounded") return kSolverFailure;
    if (r.status == "infeasible" || r.status == "infeasible-target") infeasible = true;
  }
  return infeasible ? kInfeasibleTarget : kOk;
}

// ---------------------------------------------------------------- figures

namespace {

struct Curve {
  std::string name;
  std::vector<Row> rows;
};

struct FigureDef {
  std::string name;
  std::string title;
  std::string spec;
  std::function<std::vector<Curve>(const Operator&, const std::string&, const std::vector<double>&, const Globals&)>
      build;
};

std::vector<NamedOutcome> try_points(const std::vector<std::pair<std::string, std::function<ProtocolOutcome()>>>& fs) {
  std::vector<NamedOutcome> pts;
  for (const auto& [name, f] : fs) {
    try {
      pts.push_back(named(name, f()));
    } catch (const std::invalid_argument&) {
      // protocol not applicable to this state (e.g. copy fidelity below 1/2)
    }
  }
  return pts;
}

std::vector<Row> point_rows(const std::vector<NamedOutcome>& pts, const std::string& spec) {
  std::vector<Row> rows;
  for (const auto& p : pts) rows.push_back({p.name, p.p_succ, p.fidelity, 0.0, "protocol", spec});
  return rows;
}

// Two-copy product states: the 2->1 protocols plus keeping one copy.
std::vector<NamedOutcome> two_copy_points(const Operator& rho, bool with_epl) {
  Operator c1 = copy_marginal(rho, 1);
  std::vector<std::pair<std::string, std::function<ProtocolOutcome()>>> fs{
      {"dejmps", [&] { return dejmps(rho); }},
      {"bbpssw", [&] { return bbpssw(rho); }},
      {"keep-copy", [&] { return keep_copy(c1); }},
  };
  if (with_epl) {
    fs.push_back({"epl-d", [&] { return epl_d(rho); }});
    fs.push_back({"epl-d-sep", [&] { return separable_on_failure(epl_d(rho)); }});
  }
  return try_points(fs);
}

std::vector<Curve> standard(const Operator& rho, const std::string& spec, const std::vector<double>& grid,
                            const Globals& g, const std::vector<NamedOutcome>& pts, bool bse) {
  std::vector<Curve> cs{{"protocols", point_rows(pts, spec)},
                        {"achievable", curve_rows(achievable_curve(pts, grid), spec)},
                        {"ppt", bound_rows(BoundMethod::Ppt, rho, 2, grid, g, spec)}};
  if (bse) cs.push_back({"bse1", bound_rows(BoundMethod::Bse1, rho, 2, grid, g, spec)});
  return cs;
}

std::vector<Curve> filtering_figure(double p, const std::string& spec, const std::vector<double>& grid,
                                    const Globals& g) {
  Operator rho = rotated_r(p);
  std::vector<Row> mf, fl;
  for (double d : grid) mf.push_back({"modified-filtering", d, modified_filtering_optimal(p, d), 0.0, "achievable", spec});
  for (double d : grid) {
    try {
      ProtocolOutcome o = filtering(rho, filtering_eps_for(rho, d));
      fl.push_back({"filtering", d, o.fidelity, 0.0, "achievable", spec});
    } catch (const std::invalid_argument&) {
    }
  }
  return {{"modified_filtering", mf}, {"filtering", fl}, {"ppt", bound_rows(BoundMethod::Ppt, rho, 2, grid, g, spec)}};
}

const std::vector<FigureDef>& figures() {
  static const std::vector<FigureDef> defs{
      {"fig1", "two copies of the isotropic state p=0.7: PPT, 1-BSE, DEJMPS/BBPSSW with extrapolation",
       "iso:0.7;copies=2",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return standard(rho, spec, grid, g, two_copy_points(rho, false), true);
       }},
      {"fig2", "three copies of the isotropic state p=0.7: PPT and DEJMPS A/B compositions", "iso:0.7;copies=3",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         Operator single = copy_marginal(rho, 1);
         Operator two = tensor_copies(single, 2);
         auto pts = try_points({{"dejmps-a", [&] { return dejmps_a(single); }},
                                {"dejmps-b", [&] { return dejmps_b(single); }},
                                {"dejmps", [&] { return dejmps(two); }},
                                {"keep-copy", [&] { return keep_copy(single); }}});
         return standard(rho, spec, grid, g, pts, false);
       }},
      {"fig3", "two copies of bell_diag(0.7, 0.2, 0.1): PPT, DEJMPS with extrapolation", "bell3:0.7,0.2,0.1;copies=2",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return standard(rho, spec, grid, g, two_copy_points(rho, false), false);
       }},
      {"fig4", "gap between the PPT bound and DEJMPS at its success probability, bell_diag(0.7, 0.1, p3), p3 in [0, 0.2]",
       "bell3:0.7,0.1,p3;copies=2",
       [](const Operator&, const std::string&, const std::vector<double>&, const Globals& g) {
         std::vector<double> p3s;
         for (int k = 0; k <= 40; ++k) p3s.push_back(0.2 * k / 40);
         std::vector<Row> rows(p3s.size());
         std::vector<std::string> specs(p3s.size());
         std::vector<Operator> states;
         std::vector<ProtocolOutcome> outs;
         for (double p3 : p3s) {
           StateSpec s{"bell_diag", {0.7, 0.1, p3}, 1, "", 2};
           specs[states.size()] = to_string(s);
           states.push_back(make_state(s));
           outs.push_back(dejmps(states.back()));
         }
         BoundOptions o;
         o.tol = g.tol;
         for (std::size_t i = 0; i < p3s.size(); ++i) {
           BoundResult b = ppt_fidelity_bound(states[i], 2, outs[i].p_succ, o);
           rows[i] = {"gap", outs[i].p_succ, b.value - outs[i].fidelity, b.dual_gap, b.status, specs[i]};
         }
         return std::vector<Curve>{{"gap", rows}};
       }},
      {"fig5", "single R state p=0.8: PPT and (modified) filtering", "rr:0.8",
       [](const Operator&, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return filtering_figure(0.8, spec, grid, g);
       }},
      {"fig6", "single R state p=0.4: PPT and (modified) filtering", "rr:0.4",
       [](const Operator&, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return filtering_figure(0.4, spec, grid, g);
       }},
      {"fig7", "phase-averaged EPL state p=0.8, p_d=1: PPT, EPL-D with separable extrapolation", "epl:0.8,1",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         auto pts = try_points({{"epl-d", [&] { return epl_d(rho); }},
                                {"epl-d-sep", [&] { return separable_on_failure(epl_d(rho)); }}});
         return standard(rho, spec, grid, g, pts, false);
       }},
      {"fig8", "phase-averaged EPL state p=0.5, p_d=0.8: PPT, EPL-D with separable extrapolation", "epl:0.5,0.8",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         auto pts = try_points({{"epl-d", [&] { return epl_d(rho); }},
                                {"epl-d-sep", [&] { return separable_on_failure(epl_d(rho)); }}});
         return standard(rho, spec, grid, g, pts, false);
       }},
      {"fig9", "single S state p=0.5: PPT, filtering and the seesaw-improved filtering", "s:0.5",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         std::vector<Row> fl, ss;
         for (double d : grid) {
           double eps;
           try {
             eps = filtering_eps_for(rho, d);
           } catch (const std::invalid_argument&) {
             continue;
           }
           ProtocolOutcome o = filtering(rho, eps);
           fl.push_back({"filtering", d, o.fidelity, 0.0, "achievable", spec});
           SeesawOptions so;
           so.sdp_tol = g.tol;
           SeesawState s = seesaw_run(rho, filtering_protocol(eps), so);
           ss.push_back({"seesaw", d, s.fidelity(), 0.0, s.status == "ok" ? "achievable" : s.status, spec});
         }
         return std::vector<Curve>{{"filtering", fl}, {"seesaw", ss}, {"ppt", bound_rows(BoundMethod::Ppt, rho, 2, grid, g, spec)}};
       }},
      {"fig10", "two copies of the S state p=0.6: PPT, DEJMPS with extrapolation", "s:0.6;copies=2",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return standard(rho, spec, grid, g, two_copy_points(rho, false), false);
       }},
      {"bell4", "two copies of bell_diag(0.7, 0.15, 0.1): PPT, 1-BSE, DEJMPS with extrapolation",
       "bell3:0.7,0.15,0.1;copies=2",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return standard(rho, spec, grid, g, two_copy_points(rho, false), true);
       }},
      {"r2-0.8", "two copies of the R state p=0.8: PPT, DEJMPS, EPL-D and their mixtures", "r:0.8;copies=2",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return standard(rho, spec, grid, g, two_copy_points(rho, true), false);
       }},
      {"r2-0.4", "two copies of the R state p=0.4: PPT, EPL-D with separable extrapolation", "r:0.4;copies=2",
       [](const Operator& rho, const std::string& spec, const std::vector<double>& grid, const Globals& g) {
         return standard(rho, spec, grid, g, two_copy_points(rho, true), false);
       }},
  };
  return defs;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace

std::vector<std::string> figure_names() {
  std::vector<std::string> n;
  for (const auto& f : figures()) n.push_back(f.name);
  return n;
}

FigureOutput run_figure(const std::string& name, const std::string& dir, const Globals& g,
                        const std::vector<double>& grid) {
  const FigureDef* def = nullptr;
  for (const auto& f : figures())
    if (f.name == name) def = &f;
  if (!def) {
    std::string all;
    for (const auto& n : figure_names()) all += (all.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown figure '" + name + "'; valid names: " + all);
  }
  Operator rho;
  std::string spec = def->spec;
  if (def->name != "fig4") {
    StateSpec s = parse_state_spec(def->spec);
    rho = make_state(s);
    spec = to_string(s);
  }
  auto curves = def->build(rho, spec, grid, g);
  std::filesystem::create_directories(dir);
  FigureOutput out;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& c : curves) {
    std::string fname = name + "_" + c.name + ".csv";
    write_file(std::filesystem::path(dir) / fname, to_csv(c.rows));
    out.files.push_back((std::filesystem::path(dir) / fname).string());
    files.push_back({{"curve", c.name}, {"file", fname}, {"rows", c.rows.size()}});
  }
  out.manifest = {{"tool", "distil"},       {"version", kVersion}, {"figure", name},
                  {"description", def->title}, {"state", spec},     {"target_dim", 2},
                  {"tol", g.tol},           {"grid", grid},        {"files", files}};
  std::string mname = name + "_manifest.json";
  write_file(std::filesystem::path(dir) / mname, out.manifest.dump(2) + "\n");
  out.files.push_back((std::filesystem::path(dir) / mname).string());
  return out;
}

// ---------------------------------------------------------------- commands

namespace {

void emit(const Globals& g, std::ostream& out, const std::string& text) {
  if (g.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + g.out);
  f << text;
}

std::string render(const Globals& g, const std::vector<Row>& rows) {
  if (g.format == "json") return to_json(rows).dump(2) + "\n";
  return to_csv(rows);
}

nlohmann::json outcome_json(const ProtocolOutcome& o) {
  return {{"p_succ", o.p_succ}, {"fidelity", o.fidelity}, {"output", distil::to_json(o.output)}};
}

ProtocolOutcome run_protocol(const std::string& name, const Operator& rho, double eps) {
  if (name == "filtering") return filtering(rho, eps);
  if (name == "bbpssw") return bbpssw(rho);
  if (name == "dejmps") return dejmps(rho);
  if (name == "epl-d") return epl_d(rho);
  if (name == "dejmps-a") return dejmps_a(copy_marginal(rho, 1));
  if (name == "dejmps-b") return dejmps_b(copy_marginal(rho, 1));
  throw std::invalid_argument("unknown protocol '" + name +
                              "'; valid: filtering, bbpssw, dejmps, epl-d, dejmps-a, dejmps-b");
}

std::vector<NamedOutcome> protocol_points(const std::string& name, const Operator& rho, double eps) {
  if (name == "envelope") {
    if (rho.dim() == 16) return two_copy_points(rho, true);
    if (rho.dim() == 64) {
      Operator single = copy_marginal(rho, 1);
      return try_points({{"dejmps-a", [&] { return dejmps_a(single); }},
                         {"dejmps-b", [&] { return dejmps_b(single); }},
                         {"keep-copy", [&] { return keep_copy(single); }}});
    }
    throw std::invalid_argument("envelope needs two or three two-qubit copies");
  }
  std::vector<NamedOutcome> pts{named(name, run_protocol(name, rho, eps))};
  if (name == "epl-d") pts.push_back(named("epl-d-sep", separable_on_failure(epl_d(rho))));
  else if (rho.dim() > 4 && rho.layout().size() > 2) pts.push_back(named("keep-copy", keep_copy(copy_marginal(rho, 1))));
  return pts;
}

nlohmann::json check_json(const DualCheck& c) {
  return {{"feasible", c.feasible},
          {"value", c.value},
          {"min_eig_first", c.min_eig_first},
          {"min_eig_second", c.min_eig_second},
          {"min_eig_vars", c.min_eig_vars}};
}

nlohmann::json branches_json(const std::vector<ChoiBranch>& bs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& b : bs) a.push_back({{"flag", b.flag}, {"inputs", b.inputs}, {"matrix", distil::to_json(b.matrix)}});
  return a;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds, achievable curves, seesaw optimization and dual certificates for entanglement distillation",
               "distil"};
  app.set_version_flag("--version", std::string("distil ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol", g.tol, "solver tolerance")->check(CLI::PositiveNumber);
  app.add_option("--jobs", g.jobs, "parallel grid points")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output file (directory for figure)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--dump-sdp", g.dump_sdp, "write the first SDP of a bound run as JSON");

  std::function<int()> action;

  auto* st = app.add_subcommand("state", "build a state from its spec");
  std::string st_spec;
  bool st_dump = false;
  st->add_option("spec", st_spec, "state spec, e.g. bell3:0.7,0.2,0.1;copies=2")->required();
  st->add_flag("--dump", st_dump, "write the JSON operator");
  st->callback([&] {
    action = [&] {
      StateSpec s = parse_state_spec(st_spec);
      Operator rho = make_state(s);
      if (st_dump) {
        emit(g, out, distil::to_json(rho).dump() + "\n");
        return int(kOk);
      }
      nlohmann::json j{{"spec", to_string(s)}, {"dim", rho.dim()}, {"layout", layout_to_json(rho.layout())},
                       {"trace", rho.trace()}, {"ppt", is_ppt(rho)}};
      int copies = static_cast<int>(rho.layout().labels_of(Party::Alice).size());
      nlohmann::json f = nlohmann::json::array();
      if (rho.layout().size() == static_cast<std::size_t>(2 * copies))
        for (int k = 1; k <= copies; ++k) {
          Operator c = copy_marginal(rho, k);
          f.push_back(fidelity_to_target(c, static_cast<int>(std::lround(std::sqrt(c.dim())))));
        }
      j["copy_fidelities"] = f;
      emit(g, out, j.dump(2) + "\n");
      return int(kOk);
    };
  });

  auto* pr = app.add_subcommand("protocol", "evaluate a fixed protocol");
  std::string pr_name, pr_state;
  double pr_eps = 0.5, pr_r = 1.0;
  pr->add_option("name", pr_name, "filtering, bbpssw, dejmps, epl-d, dejmps-a, dejmps-b")->required();
  pr->add_option("--state", pr_state, "state spec")->required();
  pr->add_option("--eps", pr_eps, "filtering strength")->check(CLI::Range(0.0, 1.0));
  pr->add_option("--r", pr_r, "coin weight of the protocol when extrapolating toward p_succ = 1")
      ->check(CLI::Range(0.0, 1.0));
  pr->callback([&] {
    action = [&] {
      Operator rho = make_state(parse_state_spec(pr_state));
      ProtocolOutcome o = run_protocol(pr_name, rho, pr_eps);
      if (pr_r < 1.0) {
        // epl-d falls back to a separable state, product-state protocols to one input copy
        ProtocolOutcome alt = pr_name == "epl-d" ? separable_on_failure(o) : keep_copy(copy_marginal(rho, 1));
        o = mix(pr_r, o, alt);
      }
      emit(g, out, outcome_json(o).dump(2) + "\n");
      return int(kOk);
    };
  });

  auto* cu = app.add_subcommand("curve", "achievable curve of a protocol with interpolation and extrapolation");
  std::string cu_proto, cu_state, cu_grid = "0:1:40";
  double cu_eps = 1.0;
  cu->add_option("--protocol", cu_proto, "protocol name, modified-filtering, or envelope")->required();
  cu->add_option("--state", cu_state, "state spec")->required();
  cu->add_option("--delta", cu_grid, "grid a:b:n");
  cu->add_option("--eps", cu_eps, "filtering strength")->check(CLI::Range(0.0, 1.0));
  cu->callback([&] {
    action = [&] {
      StateSpec s = parse_state_spec(cu_state);
      auto grid = parse_grid(cu_grid);
      std::ostringstream os;
      os << "delta,fidelity,source\n";
      if (cu_proto == "modified-filtering") {
        if (s.family != "rotated_r" && s.family != "r_state")
          throw std::invalid_argument("modified-filtering needs an R state spec");
        for (double d : grid) os << format_double(d) << "," << format_double(modified_filtering_optimal(s.params[0], d)) << ",modified-filtering\n";
      } else {
        Operator rho = make_state(s);
        for (const auto& p : achievable_curve(protocol_points(cu_proto, rho, cu_eps), grid))
          os << format_double(p.delta) << "," << format_double(p.fidelity) << "," << csv_field(p.source) << "\n";
      }
      emit(g, out, os.str());
      return int(kOk);
    };
  });

  auto* bo = app.add_subcommand("bound", "PPT / 1-BSE upper bounds");
  std::string bo_method = "ppt", bo_state, bo_grid;
  int bo_D = 2;
  double bo_delta = -1, bo_F = -1;
  bool bo_leq = false;
  bo->add_option("--method", bo_method, "ppt, ppt-full or bse1")->check(CLI::IsMember({"ppt", "ppt-full", "bse1"}));
  bo->add_option("--state", bo_state, "state spec")->required();
  bo->add_option("--target-dim", bo_D, "target dimension D")->check(CLI::Range(2, 16));
  auto* od = bo->add_option("--delta", bo_delta, "success probability")->check(CLI::Range(0.0, 1.0));
  auto* og = bo->add_option("--delta-grid", bo_grid, "grid a:b:n");
  auto* of = bo->add_option("--fixed-fidelity", bo_F, "maximize the success probability at this fidelity")
                 ->check(CLI::Range(0.0, 1.0));
  od->excludes(og);
  of->excludes(od)->excludes(og);
  bo->add_flag("--delta-leq", bo_leq, "relax the success equality to <= (diagnostics)");
  bo->callback([&] {
    action = [&] {
      StateSpec s = parse_state_spec(bo_state);
      Operator rho = make_state(s);
      std::string spec = to_string(s);
      BoundMethod m = bound_method_from_string(bo_method);
      BoundOptions o;
      o.tol = g.tol;
      o.delta_leq = bo_leq;
      std::vector<Row> rows;
      if (bo_F >= 0) {
        if (m != BoundMethod::Ppt) throw std::invalid_argument("--fixed-fidelity is available for --method ppt");
        if (!g.dump_sdp.empty()) write_file(g.dump_sdp, ppt_success_program(rho, bo_D, bo_F).to_json().dump(1));
        BoundResult r = ppt_success_bound(rho, bo_D, bo_F, o);
        rows.push_back({"ppt-success", r.value, bo_F, r.dual_gap, r.status, spec});
      } else {
        std::vector<double> grid;
        if (!bo_grid.empty()) grid = parse_grid(bo_grid);
        else if (bo_delta > 0) grid = {bo_delta};
        else throw std::invalid_argument("bound needs --delta, --delta-grid or --fixed-fidelity");
        if (!g.dump_sdp.empty()) {
          sdp::SdpProblem p = m == BoundMethod::Ppt       ? ppt_fidelity_program(rho, bo_D, grid[0], bo_leq)
                              : m == BoundMethod::PptFull ? ppt_full_program(rho, bo_D, grid[0])
                                                          : bse1_program(rho, bo_D, grid[0]);
          write_file(g.dump_sdp, p.to_json().dump(1));
        }
        auto res = fidelity_bound_sweep(m, rho, bo_D, grid, g.jobs, o);
        for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back(bound_row(res[i], grid[i], spec));
      }
      if (g.format == "json") {
        emit(g, out, to_json(rows).dump(2) + "\n");
      } else {
        std::string text = "method,delta,bound,dual_gap,status\n";
        for (const auto& r : rows)
          text += r.method + "," + format_double(r.delta) + "," + format_double(r.value) + "," +
                  format_double(r.dual_gap) + "," + r.status + "\n";
        emit(g, out, text);
      }
      return exit_code_for(rows);
    };
  });

  auto* ss = app.add_subcommand("seesaw", "alternating SDP improvement of a protocol");
  std::string ss_state, ss_init = "filtering:0.5", ss_rule = "local";
  double ss_delta = 0.0, ss_tol = 1e-7;
  int ss_iters = 50;
  bool ss_alice_first = false;
  ss->add_option("--state", ss_state, "state spec")->required();
  ss->add_option("--init", ss_init, "filtering:<eps>, dejmps, epl-d, identity or random:<seed>");
  ss->add_option("--delta", ss_delta, "success probability (default: that of the initial protocol)")
      ->check(CLI::Range(0.0, 1.0));
  ss->add_option("--flag-rule", ss_rule, "local or nonlocal")->check(CLI::IsMember({"local", "nonlocal"}));
  ss->add_option("--max-iters", ss_iters, "iteration cap")->check(CLI::PositiveNumber);
  ss->add_option("--tol", ss_tol, "stop when a full alternation gains less than this");
  ss->add_flag("--alice-first", ss_alice_first, "optimize Alice first");
  ss->callback([&] {
    action = [&] {
      Operator rho = make_state(parse_state_spec(ss_state));
      FlagRule rule = ss_rule == "local" ? FlagRule::Local : FlagRule::Nonlocal;
      KrausProtocol init;
      if (ss_init.rfind("filtering:", 0) == 0) init = filtering_protocol(std::stod(ss_init.substr(10)));
      else if (ss_init == "filtering") init = filtering_protocol(0.5);
      else if (ss_init == "dejmps") init = dejmps_protocol(2);
      else if (ss_init == "epl-d") init = epl_d_protocol(true);
      else if (ss_init == "identity") init = identity_protocol();
      else if (ss_init.rfind("random:", 0) == 0) init = random_protocol(rho, rule, std::stoull(ss_init.substr(7)));
      else throw std::invalid_argument("unknown --init '" + ss_init + "'");
      init.rule = rule;
      SeesawOptions o;
      o.max_iters = ss_iters;
      o.tol = ss_tol;
      o.delta = ss_delta;
      o.sdp_tol = g.tol;
      o.bob_first = !ss_alice_first;
      SeesawState s = seesaw_run(rho, init, o);
      nlohmann::json t = nlohmann::json::array();
      for (const auto& p : s.trajectory)
        t.push_back({{"iteration", p.iteration}, {"side", p.side}, {"fidelity", p.fidelity}, {"p_succ", p.p_succ}});
      nlohmann::json j{{"state", ss_state},     {"init", ss_init},  {"flag_rule", ss_rule},
                       {"delta", s.delta},      {"status", s.status}, {"fidelity", s.fidelity()},
                       {"p_succ", s.p_succ()},  {"trajectory", t},  {"alice", branches_json(s.alice)},
                       {"bob", branches_json(s.bob)}};
      emit(g, out, j.dump(2) + "\n");
      return s.status == "ok" ? int(kOk) : int(kSolverFailure);
    };
  });

  auto* ce = app.add_subcommand("certify", "check analytic dual certificates");
  ce->require_subcommand(1);
  auto* cd = ce->add_subcommand("dejmps", "rank-3 Bell-diagonal states");
  double cd_p1 = 0.7, cd_p2 = 0.2, cd_delta = -1;
  cd->add_option("--p1", cd_p1)->required();
  cd->add_option("--p2", cd_p2)->required();
  cd->add_option("--delta", cd_delta, "success probability of the fidelity certificate (default: DEJMPS)")
      ->check(CLI::Range(0.0, 1.0));
  cd->callback([&] {
    action = [&] {
      const double n = dejmps_rank3_success(cd_p1), f = dejmps_rank3_fidelity(cd_p1);
      const double delta = cd_delta > 0 ? cd_delta : n;
      Operator rho = rank3_pair(cd_p1, cd_p2);
      DualCheck fc = eval_fidelity_dual(rho, 2, delta, dejmps_fidelity_certificate(cd_p1, cd_p2, delta));
      nlohmann::json j{{"p1", cd_p1}, {"p2", cd_p2}, {"delta", delta},
                       {"dejmps", {{"p_succ", n}, {"fidelity", f}}}, {"fidelity_certificate", check_json(fc)}};
      BoundOptions o;
      o.tol = g.tol;
      BoundResult b = ppt_fidelity_bound(rho, 2, delta, o);
      j["ppt_fidelity_bound"] = {{"value", b.value}, {"status", b.status}, {"difference", b.value - fc.value}};
      bool ok = fc.feasible;
      if (cd_p1 >= 0.505) {
        DualCheck sc = eval_success_dual(rho, 2, f, dejmps_success_certificate(cd_p1, cd_p2));
        BoundResult sb = ppt_success_bound(rho, 2, f, o);
        j["success_certificate"] = check_json(sc);
        j["ppt_success_bound"] = {{"value", sb.value}, {"status", sb.status}, {"difference", sb.value - sc.value}};
        ok = ok && sc.feasible;
      } else {
        j["success_certificate"] = "not built below p1 = 0.505";
      }
      emit(g, out, j.dump(2) + "\n");
      return ok ? int(kOk) : int(kSolverFailure);
    };
  });
  auto* cp = ce->add_subcommand("epl", "phase-averaged EPL state");
  double cp_p = 0.8, cp_pd = 1.0;
  cp->add_option("--p", cp_p)->required()->check(CLI::Range(0.0, 1.0));
  cp->add_option("--pd", cp_pd)->required()->check(CLI::Range(0.0, 1.0));
  cp->callback([&] {
    action = [&] {
      EplBlocks b = epl_block_decomposition(cp_p, cp_pd);
      Operator rho = epl_integrated(cp_p, cp_pd);
      const double q = cp_p * cp_p / 2;
      double s = relative_entropy(rho, sep_guess_state(cp_p));
      double id = q * (1 - binary_entropy(cp_pd));
      ProtocolOutcome e = epl_d(rho);
      nlohmann::json j{{"p", cp_p},
                       {"pd", cp_pd},
                       {"weights", {{"L", b.weight_l}, {"I", b.weight_i}, {"F", b.weight_f}}},
                       {"relative_entropy", s},
                       {"identity", id},
                       {"identity_difference", s - id},
                       {"epl_d", {{"p_succ", e.p_succ}, {"fidelity", e.fidelity}}}};
      bool ok = std::abs(s - id) <= 1e-8;
      if (q > 0) {
        BoundOptions o;
        o.tol = g.tol;
        BoundResult bb = ppt_fidelity_bound(rho, 2, q, o);
        j["ppt_fidelity_bound"] = {{"value", bb.value}, {"status", bb.status}, {"difference", bb.value - e.fidelity}};
      }
      emit(g, out, j.dump(2) + "\n");
      return ok ? int(kOk) : int(kSolverFailure);
    };
  });

  auto* fi = app.add_subcommand("figure", "reproduce the data behind a figure");
  std::string fi_name, fi_grid;
  bool fi_list = false;
  fi->add_option("name", fi_name, "figure name");
  fi->add_option("--grid", fi_grid, "override the default 40-point grid, a:b:n");
  fi->add_flag("--list", fi_list, "list figure names");
  fi->callback([&] {
    action = [&] {
      if (fi_list || fi_name.empty()) {
        for (const auto& n : figure_names()) out << n << "\n";
        return fi_name.empty() && !fi_list ? int(kInvalidConfig) : int(kOk);
      }
      auto grid = fi_grid.empty() ? default_delta_grid() : parse_grid(fi_grid);
      FigureOutput f = run_figure(fi_name, g.out.empty() ? "figures" : g.out, g, grid);
      for (const auto& p : f.files) out << p << "\n";
      std::vector<Row> all;
      for (const auto& p : f.files)
        if (p.size() > 4 && p.substr(p.size() - 4) == ".csv") {
          std::ifstream in(p);
          std::stringstream buf;
          buf << in.rdbuf();
          auto rows = parse_csv(buf.str());
          all.insert(all.end(), rows.begin(), rows.end());
        }
      return exit_code_for(all);
    };
  });

  auto* sw = app.add_subcommand("sweep", "bound methods over a grid, merged into one table");
  std::string sw_state, sw_methods = "ppt", sw_grid = "0:1:40";
  int sw_D = 2;
  sw->add_option("--state", sw_state, "state spec")->required();
  sw->add_option("--methods", sw_methods, "comma-separated: ppt, ppt-full, bse1");
  sw->add_option("--delta-grid", sw_grid, "grid a:b:n");
  sw->add_option("--target-dim", sw_D, "target dimension D")->check(CLI::Range(2, 16));
  sw->callback([&] {
    action = [&] {
      SweepJob job;
      job.state = parse_state_spec(sw_state);
      std::stringstream ms(sw_methods);
      std::string m;
      while (std::getline(ms, m, ',')) job.methods.push_back(bound_method_from_string(m));
      job.grid = parse_grid(sw_grid);
      job.D = sw_D;
      auto rows = run_sweep(job, g);
      emit(g, out, render(g, rows));
      return exit_code_for(rows);
    };
  });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInvalidConfig;
  }
  if (!action) return kInvalidConfig;
  try {
    return action();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace distil::cli
