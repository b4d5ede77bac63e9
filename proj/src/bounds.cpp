#include "distil/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace distil {

using sdp::LinearMap;
using sdp::MatrixTerm;
using sdp::ScalarTerm;
using sdp::SdpProblem;
using sdp::Sense;

std::string to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::Ppt: return "ppt";
    case BoundMethod::PptFull: return "ppt-full";
    case BoundMethod::Bse1: return "bse1";
  }
  return "?";
}

BoundMethod bound_method_from_string(const std::string& s) {
  if (s == "ppt") return BoundMethod::Ppt;
  if (s == "ppt-full") return BoundMethod::PptFull;
  if (s == "bse1") return BoundMethod::Bse1;
  throw std::invalid_argument("unknown bound method '" + s + "' (ppt, ppt-full, bse1)");
}

namespace {

// rho reordered to (Alice..., Bob...)
Operator canonical(const Operator& rho) {
  auto order = rho.layout().labels_of(Party::Alice);
  auto bob = rho.layout().labels_of(Party::Bob);
  if (order.empty() || bob.empty()) throw std::invalid_argument("state needs Alice and Bob subsystems");
  if (rho.layout().has_party(Party::Flag)) throw std::invalid_argument("state must not carry flag subsystems");
  order.insert(order.end(), bob.begin(), bob.end());
  return permute_subsystems(rho, order);
}

void check_target(int D) {
  if (D < 2) throw std::invalid_argument("target dimension D must be >= 2");
}

std::set<std::string> bob_labels(const Layout& l) {
  auto v = l.labels_of(Party::Bob);
  return {v.begin(), v.end()};
}

CMat rho_t(const Operator& r) { return r.mat().transpose(); }

double ab_of(const Operator& r) {
  return static_cast<double>(r.layout().party_dim(Party::Alice)) * r.layout().party_dim(Party::Bob);
}

std::string status_name(const sdp::SdpSolution& s) { return sdp::to_string(s.status); }

BoundResult finish(BoundMethod m, double param, const sdp::SdpSolution& s) {
  BoundResult r;
  r.method = m;
  r.param = param;
  r.primal = s;
  r.status = status_name(s);
  r.value = std::clamp(s.primal_objective, 0.0, 1.0);
  r.dual_gap = s.dual_objective - s.primal_objective;
  return r;
}

// Reduced-program constraints shared by Programs 5 and 6.
void add_reduced_constraints(SdpProblem& p, const Layout& l, int D, double ab) {
  const int n = l.total_dim();
  const CMat id = CMat::Identity(n, n) / ab;
  LinearMap idm(l);
  LinearMap ptm(l);
  ptm.pt();
  p.add_matrix_constraint("sum", {{"M", 1.0, idm}, {"E", 1.0, idm}}, Sense::Le, id);
  p.add_matrix_constraint("sum_pt", {{"M", 1.0, ptm}, {"E", 1.0, ptm}}, Sense::Le, id);
  p.add_matrix_constraint("twirl_plus", {{"M", 1.0, ptm}, {"E", 1.0 / (D + 1), ptm}}, Sense::Ge, CMat::Zero(n, n));
  p.add_matrix_constraint("twirl_minus", {{"M", -1.0, ptm}, {"E", 1.0 / (D - 1), ptm}}, Sense::Ge, CMat::Zero(n, n));
}

// order of constraints in the reduced programs: sum, sum_pt, twirl_plus, twirl_minus, then the scalar row
constexpr int kJ = 0, kK = 1, kG = 2, kH = 3, kY = 4;

}  // namespace

SdpProblem ppt_fidelity_program(const Operator& rho0, int D, double delta, bool delta_leq) {
  check_target(D);
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("delta must lie in (0, 1]");
  Operator rho = canonical(rho0);
  const int n = rho.dim();
  const double ab = ab_of(rho);
  SdpProblem p;
  p.add_block("M", n);
  p.add_block("E", n);
  CMat rt = rho_t(rho);
  p.add_objective("M", rt * (ab / delta));
  add_reduced_constraints(p, rho.layout(), D, ab);
  p.add_scalar_constraint("success", {{"M", rt * ab}, {"E", rt * ab}}, delta_leq ? Sense::Le : Sense::Eq, delta);
  return p;
}

SdpProblem ppt_success_program(const Operator& rho0, int D, double F) {
  check_target(D);
  if (!(F > 0.0) || F > 1.0) throw std::invalid_argument("fidelity must lie in (0, 1]");
  Operator rho = canonical(rho0);
  const int n = rho.dim();
  const double ab = ab_of(rho);
  SdpProblem p;
  p.add_block("M", n);
  p.add_block("E", n);
  CMat rt = rho_t(rho);
  p.add_objective("M", rt * ab);
  p.add_objective("E", rt * ab);
  add_reduced_constraints(p, rho.layout(), D, ab);
  p.add_scalar_constraint("fidelity", {{"M", rt * (1.0 - F)}, {"E", rt * (-F)}}, Sense::Eq, 0.0);
  return p;
}

SdpProblem ppt_full_program(const Operator& rho0, int D, double delta) {
  check_target(D);
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("delta must lie in (0, 1]");
  Operator rho = canonical(rho0);
  const double ab = ab_of(rho);
  for (const auto& s : rho.layout().entries())
    if (s.label == "Ahat" || s.label == "Bhat") throw std::invalid_argument("state labels Ahat/Bhat are reserved");
  // variable on (Ahat, A', Bhat, B')
  Operator phi = max_entangled(D, "Ahat", "Bhat");
  Operator rt(rho.layout(), rho_t(rho));
  Operator big = kron(phi, rt);
  Operator ones = kron(Operator(phi.layout(), CMat::Identity(D * D, D * D)), rt);
  std::vector<std::string> order{"Ahat"};
  for (const auto& l : rho.layout().labels_of(Party::Alice)) order.push_back(l);
  order.push_back("Bhat");
  for (const auto& l : rho.layout().labels_of(Party::Bob)) order.push_back(l);
  big = permute_subsystems(big, order);
  ones = permute_subsystems(ones, order);
  const Layout& L = big.layout();
  const int n = L.total_dim();
  const int m = rho.dim();
  SdpProblem p;
  p.add_block("C", n);
  p.add_objective("C", big.mat() * (ab / delta));
  p.add_scalar_constraint("success", {{"C", ones.mat() * ab}}, Sense::Eq, delta);
  LinearMap ptm(L);
  ptm.pt();
  p.add_matrix_constraint("ppt", {{"C", 1.0, ptm}}, Sense::Ge, CMat::Zero(n, n));
  auto inputs = rho.layout().labels();
  std::set<std::string> keep(inputs.begin(), inputs.end());
  LinearMap marg(L);
  marg.keep(keep);
  LinearMap marg_pt(L);
  marg_pt.keep(keep).pt();
  const CMat id = CMat::Identity(m, m) / ab;
  p.add_matrix_constraint("marginal", {{"C", 1.0, marg}}, Sense::Le, id);
  p.add_matrix_constraint("marginal_pt", {{"C", 1.0, marg_pt}}, Sense::Le, id);
  return p;
}

int bse1_variable_dim(const Operator& rho0, int D) {
  Operator rho = canonical(rho0);
  const int ca = rho.layout().party_dim(Party::Alice);
  const int cb = rho.layout().party_dim(Party::Bob);
  const int d = ca * D;
  return d * (d + 1) / 2 * D * cb;
}

SdpProblem bse1_program(const Operator& rho0, int D, double delta) {
  check_target(D);
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("delta must lie in (0, 1]");
  Operator rho = canonical(rho0);
  const int ca = rho.layout().party_dim(Party::Alice);
  const int cb = rho.layout().party_dim(Party::Bob);
  if (ca * D > 12) throw std::invalid_argument("bse1 refuses inputs with C*D > 12 (C = " + std::to_string(ca) + ")");
  const double ab = static_cast<double>(ca) * cb;
  const int d = ca * D;         // one Alice copy (Ahat A')
  const int nb = D * cb;        // Bob (Bhat B')
  const int ns = d * (d + 1) / 2;
  const int nw = ns * nb;
  const int nfull = d * d * nb;

  // symmetric basis in lexicographic (i <= j) order, tensored with the identity on Bob
  std::vector<Eigen::Triplet<double>> tv;
  const double s2 = 1.0 / std::sqrt(2.0);
  int s = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++s)
      for (int b = 0; b < nb; ++b) {
        int col = s * nb + b;
        if (i == j) {
          tv.emplace_back((i * d + i) * nb + b, col, 1.0);
        } else {
          tv.emplace_back((i * d + j) * nb + b, col, s2);
          tv.emplace_back((j * d + i) * nb + b, col, s2);
        }
      }
  sdp::SpMat V(nfull, nw);
  V.setFromTriplets(tv.begin(), tv.end());

  Layout wl({{"Sym", Party::Alice, ns}, {"Bhat", Party::Bob, D}, {"Bp", Party::Bob, cb}});
  Layout full({{"Ahat1", Party::Alice, D},
               {"Ap1", Party::Alice, ca},
               {"Ahat2", Party::Alice, D},
               {"Ap2", Party::Alice, ca},
               {"Bhat", Party::Bob, D},
               {"Bp", Party::Bob, cb}});

  // I_{Ahat1 A'1} (x) Phi_D(Ahat2, Bhat) (x) rho^T(A'2, B'), in the order of `full`
  Layout lr({{"Ap2", Party::Alice, ca}, {"Bp", Party::Bob, cb}});
  Operator rt(lr, rho_t(rho));
  Operator id1(Layout({{"Ahat1", Party::Alice, D}, {"Ap1", Party::Alice, ca}}), CMat::Identity(d, d));
  Operator phi = max_entangled(D, "Ahat2", "Bhat");
  Operator idp(phi.layout(), CMat::Identity(D * D, D * D));
  std::vector<std::string> order = full.labels();
  Operator xo = permute_subsystems(kron(kron(id1, phi), rt), order);
  Operator yo = permute_subsystems(kron(kron(id1, idp), rt), order);
  Eigen::SparseMatrix<cplx> Vc = V.cast<cplx>();
  CMat xs = CMat(Vc.adjoint() * (xo.mat() * Vc)) * (ab / delta);
  CMat ys = CMat(Vc.adjoint() * (yo.mat() * Vc)) * ab;
  xs = (xs + xs.adjoint()) * 0.5;
  ys = (ys + ys.adjoint()) * 0.5;

  SdpProblem p;
  p.add_block("W", nw);
  p.add_objective("W", xs);
  p.add_scalar_constraint("success", {{"W", ys}}, Sense::Eq, delta);
  LinearMap ext(wl);
  ext.congruence(V, full);
  LinearMap choi = ext;
  choi.keep({"Ahat2", "Ap2", "Bhat", "Bp"}).pt();
  p.add_matrix_constraint("ppt", {{"W", 1.0, choi}}, Sense::Ge, CMat::Zero(d * nb, d * nb));
  LinearMap marg = ext;
  marg.keep({"Ap2", "Bp"});
  LinearMap marg_pt = marg;
  marg_pt.pt();
  const CMat id = CMat::Identity(ca * cb, ca * cb) / ab;
  p.add_matrix_constraint("marginal", {{"W", 1.0, marg}}, Sense::Le, id);
  p.add_matrix_constraint("marginal_pt", {{"W", 1.0, marg_pt}}, Sense::Le, id);
  return p;
}

namespace {

sdp::SolveOptions solve_opts(const BoundOptions& o) {
  sdp::SolveOptions so;
  so.form = o.form;
  so.verbose = o.verbose;
  return so;
}

}  // namespace

BoundResult ppt_fidelity_bound(const Operator& rho, int D, double delta, const BoundOptions& opt) {
  auto p = ppt_fidelity_program(rho, D, delta, opt.delta_leq);
  return finish(BoundMethod::Ppt, delta, sdp::solve(p, opt.tol, solve_opts(opt)));
}

BoundResult ppt_success_bound(const Operator& rho, int D, double F, const BoundOptions& opt) {
  auto p = ppt_success_program(rho, D, F);
  BoundResult r = finish(BoundMethod::Ppt, F, sdp::solve(p, opt.tol, solve_opts(opt)));
  // only the zero operation meets the fidelity constraint: the target is out of reach
  if (r.status == "infeasible" || (r.ok() && r.primal.primal_objective < 1e-7)) r.status = "infeasible-target";
  return r;
}

BoundResult ppt_fidelity_bound_full(const Operator& rho, int D, double delta, const BoundOptions& opt) {
  auto p = ppt_full_program(rho, D, delta);
  return finish(BoundMethod::PptFull, delta, sdp::solve(p, opt.tol, solve_opts(opt)));
}

BoundResult bse1_fidelity_bound(const Operator& rho, int D, double delta, const BoundOptions& opt) {
  auto p = bse1_program(rho, D, delta);
  return finish(BoundMethod::Bse1, delta, sdp::solve(p, opt.tol, solve_opts(opt)));
}

BoundResult fidelity_bound(BoundMethod m, const Operator& rho, int D, double delta, const BoundOptions& opt) {
  switch (m) {
    case BoundMethod::Ppt: return ppt_fidelity_bound(rho, D, delta, opt);
    case BoundMethod::PptFull: return ppt_fidelity_bound_full(rho, D, delta, opt);
    case BoundMethod::Bse1: return bse1_fidelity_bound(rho, D, delta, opt);
  }
  throw std::invalid_argument("bad method");
}

namespace {

struct Lhs {
  CMat first, second;
};

Lhs dual_lhs(const Operator& rho, int D, double a1, double a2, const DualCertificate& c) {
  auto bl = bob_labels(rho.layout());
  auto pt = [&](const CMat& m) { return partial_transpose_matrix(m, rho.layout(), bl); };
  CMat rt = rho_t(rho);
  CMat g = pt(c.G), h = pt(c.H), k = pt(c.K);
  Lhs l;
  l.first = a1 * rt + c.J - g + h + k;
  l.second = a2 * rt + c.J - g / (D + 1) - h / (D - 1) + k;
  return l;
}

DualCheck check(const Lhs& l, const DualCertificate& c, double value, double tol) {
  DualCheck r;
  r.value = value;
  r.min_eig_first = min_eigenvalue(hermitize(l.first, 1e-6));
  r.min_eig_second = min_eigenvalue(hermitize(l.second, 1e-6));
  r.min_eig_vars = std::min({min_eigenvalue(c.J), min_eigenvalue(c.G), min_eigenvalue(c.H), min_eigenvalue(c.K)});
  r.feasible = r.min_eig_first >= -tol && r.min_eig_second >= -tol && r.min_eig_vars >= -tol;
  return r;
}

void check_cert_dims(const Operator& rho, const DualCertificate& c) {
  const int n = rho.dim();
  for (const CMat* m : {&c.J, &c.G, &c.H, &c.K})
    if (m->rows() != n || m->cols() != n) throw std::invalid_argument("certificate dimension mismatch");
}

}  // namespace

DualCheck eval_fidelity_dual(const Operator& rho0, int D, double delta, const DualCertificate& c, double tol) {
  Operator rho = canonical(rho0);
  check_cert_dims(rho, c);
  const double ab = ab_of(rho);
  Lhs l = dual_lhs(rho, D, ab * (c.y - 1.0 / delta), ab * c.y, c);
  return check(l, c, c.y * delta + (c.J + c.K).trace().real() / ab, tol);
}

DualCheck eval_success_dual(const Operator& rho0, int D, double F, const DualCertificate& c, double tol) {
  Operator rho = canonical(rho0);
  check_cert_dims(rho, c);
  const double ab = ab_of(rho);
  Lhs l = dual_lhs(rho, D, (1.0 - F) * c.y - ab, -F * c.y - ab, c);
  return check(l, c, (c.J + c.K).trace().real() / ab, tol);
}

DualCertificate certificate_from_solution(const Operator& rho0, int /*D*/, const sdp::SdpSolution& sol) {
  Operator rho = canonical(rho0);
  if (sol.constraint_duals.size() != 5) throw std::invalid_argument("not a reduced-program solution");
  DualCertificate c;
  c.layout = rho.layout();
  c.J = psd_clip(sol.constraint_duals[kJ]);
  c.K = psd_clip(sol.constraint_duals[kK]);
  c.G = psd_clip(sol.constraint_duals[kG]);
  c.H = psd_clip(sol.constraint_duals[kH]);
  c.y = sol.constraint_duals[kY](0, 0).real();
  return c;
}

namespace {

DualCertificate shift_j(DualCertificate c, const Lhs& l) {
  double lo = std::min(min_eigenvalue(hermitize(l.first, 1e-6)), min_eigenvalue(hermitize(l.second, 1e-6)));
  if (lo < 0) c.J += CMat::Identity(c.J.rows(), c.J.cols()) * (-lo);
  return c;
}

}  // namespace

DualCertificate repair_fidelity_certificate(const Operator& rho0, int D, double delta, DualCertificate c) {
  Operator rho = canonical(rho0);
  const double ab = ab_of(rho);
  return shift_j(c, dual_lhs(rho, D, ab * (c.y - 1.0 / delta), ab * c.y, c));
}

DualCertificate repair_success_certificate(const Operator& rho0, int D, double F, DualCertificate c) {
  Operator rho = canonical(rho0);
  const double ab = ab_of(rho);
  return shift_j(c, dual_lhs(rho, D, (1.0 - F) * c.y - ab, -F * c.y - ab, c));
}

std::vector<double> make_grid(double a, double b, int n) {
  if (n < 1) throw std::invalid_argument("grid count must be >= 1");
  if (!(b > 0.0) || b > 1.0 || a < 0.0 || a > b) throw std::invalid_argument("grid must lie in (0, 1]");
  std::vector<double> g;
  if (a == 0.0) {
    for (int k = 1; k <= n; ++k) g.push_back(b * k / n);
  } else if (n == 1) {
    g.push_back(a);
  } else {
    for (int k = 0; k < n; ++k) g.push_back(a + (b - a) * k / (n - 1));
  }
  return g;
}

std::vector<double> default_delta_grid() { return make_grid(0.0, 1.0, 40); }

std::vector<BoundResult> fidelity_bound_sweep(BoundMethod m, const Operator& rho, int D,
                                              const std::vector<double>& grid, int jobs,
                                              const BoundOptions& opt) {
  std::vector<BoundResult> out(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < grid.size();) {
      try {
        out[i] = fidelity_bound(m, rho, D, grid[i], opt);
      } catch (const std::exception&) {
        out[i].method = m;
        out[i].param = grid[i];
        out[i].status = "solver-failure";
      }
    }
  };
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> ts;
    for (int t = 0; t < jobs; ++t) ts.emplace_back(worker);
    for (auto& t : ts) t.join();
  }
  return out;
}

}  // namespace distil
