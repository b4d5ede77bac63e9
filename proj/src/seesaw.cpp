#include "distil/seesaw.hpp"

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <unsupported/Eigen/KroneckerProduct>

#include "distil/sdp.hpp"

namespace distil {

std::string to_string(Side s) { return s == Side::Alice ? "alice" : "bob"; }

namespace {

Party party_of(Side s) { return s == Side::Alice ? Party::Alice : Party::Bob; }

Layout side_layout(const Operator& rho, Side s, int D) {
  std::vector<Subsystem> es{{s == Side::Alice ? "Ahat" : "Bhat", party_of(s), D}};
  for (const auto& e : rho.layout().entries())
    if (e.party == party_of(s)) es.push_back(e);
  return Layout(es);
}

std::vector<std::string> full_order(const Operator& rho) {
  std::vector<std::string> o{"Ahat"};
  for (const auto& l : rho.layout().labels_of(Party::Alice)) o.push_back(l);
  o.push_back("Bhat");
  for (const auto& l : rho.layout().labels_of(Party::Bob)) o.push_back(l);
  return o;
}

// tr_fixed[O (fixed branch)] for O = target (x) rho^T on (Ahat A' Bhat B')
CMat contract(const Operator& o, const ChoiBranch& fixed, const Layout& free_layout, Side free_side) {
  Operator idf(free_layout, CMat::Identity(free_layout.total_dim(), free_layout.total_dim()));
  Operator t = free_side == Side::Alice ? kron(idf, fixed.matrix) : kron(fixed.matrix, idf);
  auto order = o.layout().labels();
  t = permute_subsystems(t, order);
  CMat prod = o.mat() * t.mat();
  auto fl = free_layout.labels();
  CMat g = partial_trace_matrix(prod, o.layout(), {fl.begin(), fl.end()});
  return (g + g.adjoint()) * 0.5;
}

// Rescale branches so their input marginals sum to exactly I/|in|.
void renormalize(std::vector<ChoiBranch>& bs, const Layout& l) {
  std::set<std::string> ins(bs.front().inputs.begin(), bs.front().inputs.end());
  CMat m;
  for (auto& b : bs) {
    b.matrix = Operator(l, psd_clip(b.matrix.mat()));
    CMat mb = partial_trace(b.matrix, ins).mat();
    m = m.size() ? CMat(m + mb) : mb;
  }
  const int din = static_cast<int>(m.rows());
  m *= double(din);
  Eigen::SelfAdjointEigenSolver<CMat> es(m);
  RVec ev = es.eigenvalues().cwiseMax(1e-12);
  CMat s = es.eigenvectors() * ev.cwiseInverse().cwiseSqrt().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  const int dout = l.total_dim() / din;
  CMat k = Eigen::kroneckerProduct(CMat::Identity(dout, dout), s).eval();
  for (auto& b : bs) b.matrix = Operator(l, k * b.matrix.mat() * k.adjoint());
}

}  // namespace

SeesawStep seesaw_step(const Operator& rho, const std::vector<ChoiBranch>& fixed, Side side, FlagRule rule,
                       double delta, int D, double sdp_tol) {
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("delta must lie in (0, 1]");
  if (fixed.empty()) throw std::invalid_argument("fixed side has no branches");
  const Layout fl = side_layout(rho, side, D);
  const double ab = double(rho.layout().party_dim(Party::Alice)) * rho.layout().party_dim(Party::Bob);
  const int din = rho.layout().party_dim(party_of(side));
  auto order = full_order(rho);
  Operator rt(rho.layout(), rho.mat().transpose());
  Operator phi = max_entangled(D, "Ahat", "Bhat");
  Operator obj = permute_subsystems(kron(phi, rt), order);
  Operator ones = permute_subsystems(kron(Operator(phi.layout(), CMat::Identity(D * D, D * D)), rt), order);

  std::vector<CMat> g(2, CMat::Zero(fl.total_dim(), fl.total_dim())), pr = g;
  for (int f = 0; f < 2; ++f)
    for (const auto& b : fixed) {
      bool ok = side == Side::Alice ? flags_succeed(rule, f, b.flag) : flags_succeed(rule, b.flag, f);
      if (!ok) continue;
      g[f] += contract(obj, b, fl, side);
      pr[f] += contract(ones, b, fl, side);
    }

  auto build = [&](bool relaxed) {
    sdp::SdpProblem p;
    std::vector<sdp::ScalarTerm> succ;
    std::vector<sdp::MatrixTerm> marg;
    auto inputs = fl.labels();
    inputs.erase(inputs.begin());
    sdp::LinearMap m(fl);
    m.keep({inputs.begin(), inputs.end()});
    for (int f = 0; f < 2; ++f) {
      std::string name = "C" + std::to_string(f);
      p.add_block(name, fl.total_dim());
      p.add_objective(name, g[f] * (ab / delta));
      succ.push_back({name, pr[f] * ab});
      marg.push_back({name, 1.0, m});
    }
    p.add_scalar_constraint("success", succ, relaxed ? sdp::Sense::Ge : sdp::Sense::Eq, delta);
    p.add_matrix_constraint("choi", marg, sdp::Sense::Eq, CMat::Identity(din, din) / double(din));
    return p;
  };

  SeesawStep st;
  sdp::SdpSolution sol = sdp::solve(build(false), sdp_tol);
  if (!sol.ok()) {
    sol = sdp::solve(build(true), sdp_tol);
    st.relaxed = true;
  }
  st.status = sdp::to_string(sol.status);
  if (!sol.ok()) return st;
  auto inputs = fl.labels();
  inputs.erase(inputs.begin());
  for (int f = 0; f < 2; ++f) st.branches.push_back({f, Operator(fl, sol.block_values.at("C" + std::to_string(f))), inputs});
  renormalize(st.branches, fl);
  ChoiEval e = side == Side::Alice ? evaluate_choi(rho, st.branches, fixed, rule, D)
                                   : evaluate_choi(rho, fixed, st.branches, rule, D);
  st.fidelity = e.fidelity;
  st.p_succ = e.p_succ;
  return st;
}

SeesawState seesaw_run(const Operator& rho, const ChoiProtocol& init, const SeesawOptions& opt) {
  SeesawState s;
  s.alice = init.alice;
  s.bob = init.bob;
  s.rule = init.rule;
  ChoiEval e0 = evaluate_choi(rho, s.alice, s.bob, s.rule, opt.D);
  s.delta = opt.delta > 0 ? opt.delta : e0.p_succ;
  if (!(s.delta > 0.0)) throw std::invalid_argument("initial protocol never succeeds; pass a delta");
  s.delta = std::min(s.delta, 1.0);
  s.trajectory.push_back({0, "init", e0.fidelity, e0.p_succ});
  double best = opt.delta > 0 ? -1.0 : e0.fidelity;  // an init at a different delta is not a feasible point
  Side side = opt.bob_first ? Side::Bob : Side::Alice;
  int stale = 0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    const auto& fixed = side == Side::Alice ? s.bob : s.alice;
    SeesawStep st = seesaw_step(rho, fixed, side, s.rule, s.delta, opt.D, opt.sdp_tol);
    if (!st.ok()) {
      s.status = "step " + std::to_string(it) + " " + to_string(side) + ": " + st.status;
      break;
    }
    double prev = s.trajectory.back().fidelity;
    if (st.fidelity >= best) {
      (side == Side::Alice ? s.alice : s.bob) = st.branches;
      s.trajectory.push_back({it, to_string(side), st.fidelity, st.p_succ});
    } else {
      // solver noise made the step worse than the point it started from: keep that point
      s.trajectory.push_back({it, to_string(side), s.trajectory.back().fidelity, s.trajectory.back().p_succ});
    }
    best = std::max(best, s.trajectory.back().fidelity);
    double gain = s.trajectory.back().fidelity - prev;
    // stop once a full alternation (both sides) brings no gain
    stale = gain < opt.tol ? stale + 1 : 0;
    if (stale >= 2) break;
    side = side == Side::Alice ? Side::Bob : Side::Alice;
  }
  return s;
}

SeesawState seesaw_run(const Operator& rho, const KrausProtocol& init, const SeesawOptions& opt) {
  return seesaw_run(rho, to_choi(init), opt);
}

KrausProtocol random_protocol(const Operator& rho, FlagRule rule, std::uint64_t seed, int D) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  auto side = [&](Party party, const std::string& out) {
    SideKraus sk;
    std::vector<Subsystem> ins;
    for (const auto& e : rho.layout().entries())
      if (e.party == party) ins.push_back(e);
    sk.in = Layout(ins);
    sk.out = Layout({{out, party, D}});
    const int din = sk.in.total_dim();
    const int per = (din + 2 * D - 1) / (2 * D);  // Kraus operators per flag
    const int rows = 2 * per * D;
    RMat gm(rows, din);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < din; ++j) gm(i, j) = nd(gen);
    Eigen::HouseholderQR<RMat> qr(gm);
    RMat q = qr.householderQ() * RMat::Identity(rows, din);
    for (int k = 0; k < 2 * per; ++k) sk.ops.push_back({k / per, q.block(k * D, 0, D, din).cast<cplx>()});
    return sk;
  };
  KrausProtocol p;
  p.alice = side(Party::Alice, "Ahat");
  p.bob = side(Party::Bob, "Bhat");
  p.rule = rule;
  return p;
}

}  // namespace distil
