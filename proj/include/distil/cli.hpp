#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "distil/bounds.hpp"
#include "distil/states.hpp"

namespace distil::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kInvalidConfig = 2, kSolverFailure = 3, kInfeasibleTarget = 4 };

struct Globals {
  double tol = 1e-8;
  int jobs = 1;
  std::string out;  // file (or directory for `figure`); empty writes to stdout
  std::string format = "csv";
  std::string dump_sdp;
};

// One output row; the CSV header is `method,delta,bound_or_fidelity,dual_gap,status,source_spec`.
struct Row {
  std::string method;
  double delta = 0.0;
  double value = 0.0;
  double dual_gap = 0.0;
  std::string status;
  std::string source;
};

std::string csv_header();
std::string csv_field(const std::string& s);  // quotes fields holding commas or quotes
std::string format_double(double x);          // 17 significant digits
std::string to_csv(const std::vector<Row>& rows);
std::vector<Row> parse_csv(const std::string& text);
nlohmann::json to_json(const std::vector<Row>& rows);

// `a:b:n` -> make_grid(a, b, n)
std::vector<double> parse_grid(const std::string& text);

struct SweepJob {
  StateSpec state;
  std::vector<BoundMethod> methods;
  std::vector<double> grid;
  int D = 2;
};

// Rows in method order, then grid order.
std::vector<Row> run_sweep(const SweepJob& job, const Globals& g);
int exit_code_for(const std::vector<Row>& rows);

std::vector<std::string> figure_names();
struct FigureOutput {
  std::vector<std::string> files;
  nlohmann::json manifest;
};
// Writes `<dir>/<name>_<curve>.csv` files and `<dir>/<name>_manifest.json`.
FigureOutput run_figure(const std::string& name, const std::string& dir, const Globals& g,
                        const std::vector<double>& grid);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace distil::cli
