#pragma once

#include <string>
#include <vector>

#include "distil/qmath.hpp"
#include "distil/sdp.hpp"

namespace distil {

enum class BoundMethod { Ppt, PptFull, Bse1 };
std::string to_string(BoundMethod m);
BoundMethod bound_method_from_string(const std::string& s);

// Dual variables of the reduced fidelity / success programs, all on A'B'.
struct DualCertificate {
  double y = 0.0;
  CMat J, G, H, K;
  Layout layout;
};

struct DualCheck {
  bool feasible = false;
  double value = 0.0;
  double min_eig_first = 0.0;   // first matrix inequality
  double min_eig_second = 0.0;  // second matrix inequality
  double min_eig_vars = 0.0;    // min over J, G, H, K
};

struct BoundResult {
  double value = 0.0;
  double param = 0.0;  // delta for fidelity bounds, F for success bounds
  sdp::SdpSolution primal;
  double dual_gap = 0.0;
  BoundMethod method = BoundMethod::Ppt;
  std::string status;  // optimal, near-optimal, infeasible, infeasible-target, unbounded, solver-failure
  bool ok() const { return status == "optimal" || status == "near-optimal"; }
};

struct BoundOptions {
  double tol = 1e-8;
  bool delta_leq = false;  // relax the success equality to <=
  sdp::Form form = sdp::Form::Auto;
  bool verbose = false;
};

// Model builders, exposed for --dump-sdp and tests.
sdp::SdpProblem ppt_fidelity_program(const Operator& rho, int D, double delta, bool delta_leq = false);
sdp::SdpProblem ppt_success_program(const Operator& rho, int D, double F);
sdp::SdpProblem ppt_full_program(const Operator& rho, int D, double delta);
sdp::SdpProblem bse1_program(const Operator& rho, int D, double delta);

BoundResult ppt_fidelity_bound(const Operator& rho, int D, double delta, const BoundOptions& opt = {});
BoundResult ppt_success_bound(const Operator& rho, int D, double F, const BoundOptions& opt = {});
BoundResult ppt_fidelity_bound_full(const Operator& rho, int D, double delta, const BoundOptions& opt = {});
BoundResult bse1_fidelity_bound(const Operator& rho, int D, double delta, const BoundOptions& opt = {});
BoundResult fidelity_bound(BoundMethod m, const Operator& rho, int D, double delta, const BoundOptions& opt = {});

// Dimension of the symmetric-extension variable W_s.
int bse1_variable_dim(const Operator& rho, int D);

// Raw dual variables of a solved reduced program, clipped to PSD and shifted so that
// both matrix inequalities hold.
DualCertificate certificate_from_solution(const Operator& rho, int D, const sdp::SdpSolution& sol);

DualCheck eval_fidelity_dual(const Operator& rho, int D, double delta, const DualCertificate& c,
                             double tol = 1e-8);
DualCheck eval_success_dual(const Operator& rho, int D, double F, const DualCertificate& c, double tol = 1e-8);

// Shift J by the most negative eigenvalue of either inequality (fidelity or success form).
DualCertificate repair_fidelity_certificate(const Operator& rho, int D, double delta, DualCertificate c);
DualCertificate repair_success_certificate(const Operator& rho, int D, double F, DualCertificate c);

std::vector<double> default_delta_grid();
// n points; for a > 0 a uniform grid on [a, b], for a == 0 the points b*k/n, k = 1..n.
std::vector<double> make_grid(double a, double b, int n);

// Solve one bound per grid value with at most `jobs` threads; results are in grid order.
std::vector<BoundResult> fidelity_bound_sweep(BoundMethod m, const Operator& rho, int D,
                                              const std::vector<double>& grid, int jobs,
                                              const BoundOptions& opt = {});

}  // namespace distil
