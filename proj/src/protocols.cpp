#include "distil/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

#include "distil/states.hpp"

namespace distil {

namespace {

CMat kr(const CMat& a, const CMat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

CMat rx(double theta) {
  CMat m = std::cos(theta / 2) * pauli(0) - cplx(0, std::sin(theta / 2)) * pauli(1);
  return m;
}

// CNOT with control = first qubit, target = second.
CMat cnot() {
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = m(1, 1) = 1;
  m(3, 2) = m(2, 3) = 1;
  return m;
}

// (I (x) <f|) on two qubits
CMat project_target(int f) {
  CMat m = CMat::Zero(2, 4);
  m(0, 0 * 2 + f) = 1;
  m(1, 1 * 2 + f) = 1;
  return m;
}

Layout side_in(const std::string& prefix, int copies) {
  std::vector<Subsystem> es;
  for (int k = 1; k <= copies; ++k) es.push_back({prefix + std::to_string(k), prefix == "A" ? Party::Alice : Party::Bob, 2});
  return Layout(es);
}

Layout side_out(bool alice) {
  return Layout({{alice ? "Ahat" : "Bhat", alice ? Party::Alice : Party::Bob, 2}});
}

void check_r(double r) {
  if (!(r >= 0 && r <= 1)) throw std::invalid_argument("mixing weight r must lie in [0,1]");
}

}  // namespace

std::string to_string(FlagRule r) { return r == FlagRule::Local ? "local" : "nonlocal"; }

bool flags_succeed(FlagRule r, int fa, int fb) {
  return r == FlagRule::Local ? (fa == 1 && fb == 1) : (fa == fb);
}

Layout output_layout(int D) { return Layout({{"Ahat", Party::Alice, D}, {"Bhat", Party::Bob, D}}); }

BellVec bell_coefficients(const Operator& q) {
  if (q.dim() != 4) throw std::invalid_argument("bell_coefficients needs a two-qubit operator");
  BellVec w;
  for (int k = 0; k < 4; ++k) {
    CMat v = bell_vec(k);
    w[k] = (v.adjoint() * q.mat() * v)(0, 0).real();
  }
  return w;
}

Operator bell_state(const BellVec& w, const Layout& layout) {
  CMat m = CMat::Zero(4, 4);
  for (int k = 0; k < 4; ++k) m += w[k] * bell_proj(k);
  return Operator(layout, m);
}

Operator copy_marginal(const Operator& rho, int k) {
  std::string a = "A" + std::to_string(k), b = "B" + std::to_string(k);
  Operator m = partial_trace(rho, {a, b});
  return permute_subsystems(m, {a, b});
}

std::pair<double, BellVec> bilateral_cnot_bell(const BellVec& a, const BellVec& b) {
  // index k <-> (phase, parity): Phi+ (0,0), Psi+ (0,1), Phi- (1,0), Psi- (1,1)
  BellVec out{0, 0, 0, 0};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      int phi = i / 2, pai = i % 2, phj = j / 2, paj = j % 2;
      if (pai != paj) continue;
      out[((phi ^ phj) << 1) | pai] += a[i] * b[j];
    }
  double n = out[0] + out[1] + out[2] + out[3];
  if (n > 0)
    for (auto& x : out) x /= n;
  return {n, out};
}

BellVec sort_bell(const BellVec& w) {
  std::array<int, 4> idx{0, 1, 2, 3};
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return w[x] > w[y]; });
  return {w[idx[0]], w[idx[1]], w[idx[2]], w[idx[3]]};
}

ProtocolOutcome outcome_from_state(const CMat& unnormalized, int D) {
  ProtocolOutcome o;
  o.p_succ = std::clamp(unnormalized.trace().real(), 0.0, 1.0);
  if (o.p_succ <= 1e-15) {
    o.p_succ = 0.0;
    o.output = Operator(output_layout(D), CMat::Identity(D * D, D * D) / double(D * D));
  } else {
    o.output = Operator(output_layout(D), unnormalized / unnormalized.trace().real());
  }
  o.fidelity = std::clamp(fidelity_to_target(o.output, D), 0.0, 1.0);
  return o;
}

KrausProtocol filtering_protocol(double eps) {
  if (!(eps >= 0 && eps <= 1)) throw std::invalid_argument("filtering eps must lie in [0,1]");
  CMat a1 = CMat::Zero(2, 2), a0 = CMat::Zero(2, 2), b1 = CMat::Zero(2, 2), b0 = CMat::Zero(2, 2);
  a1(0, 0) = std::sqrt(eps);
  a1(1, 1) = 1;
  a0(0, 0) = std::sqrt(1 - eps);
  b1(0, 0) = 1;
  b1(1, 1) = std::sqrt(eps);
  b0(1, 1) = std::sqrt(1 - eps);
  KrausProtocol p;
  p.alice = {{{1, a1}, {0, a0}}, side_out(true), side_in("A", 1)};
  p.bob = {{{1, b1}, {0, b0}}, side_out(false), side_in("B", 1)};
  p.rule = FlagRule::Local;
  return p;
}

KrausProtocol identity_protocol() {
  KrausProtocol p;
  p.alice = {{{1, pauli(0)}}, side_out(true), side_in("A", 1)};
  p.bob = {{{1, pauli(0)}}, side_out(false), side_in("B", 1)};
  p.rule = FlagRule::Local;
  return p;
}

KrausProtocol dejmps_protocol(int copies) {
  if (copies != 2) throw std::invalid_argument("dejmps circuit is defined on two copies");
  const double h = M_PI / 2;
  KrausProtocol p;
  CMat ua = cnot() * kr(rx(h), rx(h));
  CMat ub = cnot() * kr(rx(-h), rx(-h));
  p.alice = {{{0, project_target(0) * ua}, {1, project_target(1) * ua}}, side_out(true), side_in("A", 2)};
  p.bob = {{{0, project_target(0) * ub}, {1, project_target(1) * ub}}, side_out(false), side_in("B", 2)};
  p.rule = FlagRule::Nonlocal;
  return p;
}

KrausProtocol epl_d_protocol(bool correct) {
  KrausProtocol p;
  CMat fix = correct ? pauli(1) : pauli(0);
  p.alice = {{{0, fix * project_target(0) * cnot()}, {1, fix * project_target(1) * cnot()}}, side_out(true), side_in("A", 2)};
  p.bob = {{{0, project_target(0) * cnot()}, {1, project_target(1) * cnot()}}, side_out(false), side_in("B", 2)};
  p.rule = FlagRule::Local;
  return p;
}

ProtocolOutcome simulate(const Operator& rho, const KrausProtocol& proto) {
  std::vector<std::string> order = proto.alice.in.labels();
  auto bl = proto.bob.in.labels();
  order.insert(order.end(), bl.begin(), bl.end());
  Operator r = permute_subsystems(rho, order);
  const int dout = proto.alice.out.total_dim() * proto.bob.out.total_dim();
  CMat out = CMat::Zero(dout, dout);
  for (const auto& ka : proto.alice.ops)
    for (const auto& kb : proto.bob.ops) {
      if (!flags_succeed(proto.rule, ka.flag, kb.flag)) continue;
      CMat k = kr(ka.k, kb.k);
      out += k * r.mat() * k.adjoint();
    }
  return outcome_from_state(out, proto.alice.out.total_dim());
}

ProtocolOutcome filtering(const Operator& rho, double eps) {
  if (rho.dim() != 4) throw std::invalid_argument("filtering acts on a single two-qubit copy");
  return simulate(rho, filtering_protocol(eps));
}

double filtering_eps_for(const Operator& rho, double ps) {
  double lo = 0, hi = 1;
  double p0 = filtering(rho, lo).p_succ, p1 = filtering(rho, hi).p_succ;
  if (ps < p0 - 1e-12 || ps > p1 + 1e-12)
    throw std::invalid_argument("filtering cannot reach p_succ " + std::to_string(ps) + " (range [" +
                                std::to_string(p0) + ", " + std::to_string(p1) + "])");
  for (int i = 0; i < 100 && hi - lo > 1e-15; ++i) {
    double m = 0.5 * (lo + hi);
    (filtering(rho, m).p_succ < ps ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

ProtocolOutcome bbpssw(const Operator& rho) {
  if (rho.dim() != 16) throw std::invalid_argument("bbpssw needs two two-qubit copies");
  BellVec w[2];
  for (int k = 0; k < 2; ++k) {
    double f = fidelity_to_target(copy_marginal(rho, k + 1), 2);
    if (f <= 0.5) throw std::invalid_argument("bbpssw requires copy fidelity > 1/2");
    w[k] = {f, (1 - f) / 3, (1 - f) / 3, (1 - f) / 3};
  }
  auto [n, out] = bilateral_cnot_bell(w[0], w[1]);
  ProtocolOutcome o = outcome_from_state(bell_state(out, output_layout()).mat() * n);
  return o;
}

ProtocolOutcome dejmps_bell(const BellVec& a0, const BellVec& b0) {
  BellVec a = sort_bell(a0), b = sort_bell(b0);
  if (a[0] <= 0.5 || b[0] <= 0.5) throw std::invalid_argument("dejmps requires copy fidelity > 1/2");
  // local rotations exchange the roles of Phi- and Psi-
  BellVec ar{a[0], a[1], a[3], a[2]}, br{b[0], b[1], b[3], b[2]};
  auto [n, out] = bilateral_cnot_bell(ar, br);
  return outcome_from_state(bell_state(out, output_layout()).mat() * n);
}

ProtocolOutcome dejmps(const Operator& rho) {
  if (rho.dim() != 16) throw std::invalid_argument("dejmps needs two two-qubit copies");
  Operator c1 = copy_marginal(rho, 1), c2 = copy_marginal(rho, 2);
  CMat prod = kron(c1, c2).mat();
  Operator pr = permute_subsystems(Operator(c1.layout().concat(c2.layout()), prod), {"A1", "A2", "B1", "B2"});
  if ((pr.mat() - rho.mat()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("dejmps closed form needs a product of two copies");
  return dejmps_bell(bell_coefficients(pauli_twirl(c1)), bell_coefficients(pauli_twirl(c2)));
}

ProtocolOutcome epl_d(const Operator& rho, bool correct) {
  if (rho.dim() != 16) throw std::invalid_argument("epl_d needs two two-qubit copies");
  return simulate(rho, epl_d_protocol(correct));
}

ProtocolOutcome mix(double r, const ProtocolOutcome& a, const ProtocolOutcome& b) {
  check_r(r);
  double p = r * a.p_succ + (1 - r) * b.p_succ;
  if (p <= 0) throw std::invalid_argument("mixture has zero success probability; fidelity undefined");
  if (!(a.output.layout() == b.output.layout())) throw std::invalid_argument("mix: output layouts differ");
  CMat m = (r * a.p_succ * a.output.mat() + (1 - r) * b.p_succ * b.output.mat());
  return outcome_from_state(m, static_cast<int>(std::lround(std::sqrt(a.output.dim()))));
}

ProtocolOutcome extrapolate_up(const ProtocolOutcome& base, const Operator& input_copy, double r) {
  ProtocolOutcome keep;
  keep.p_succ = 1.0;
  keep.output = Operator(base.output.layout(), input_copy.mat());
  keep.fidelity = fidelity_to_target(keep.output, static_cast<int>(std::lround(std::sqrt(input_copy.dim()))));
  return mix(r, base, keep);
}

ProtocolOutcome extrapolate_up(const ProtocolOutcome& base, double f_in, double r) {
  if (!(f_in >= 0 && f_in <= 1)) throw std::invalid_argument("input fidelity must lie in [0,1]");
  BellVec w{f_in, (1 - f_in) / 3, (1 - f_in) / 3, (1 - f_in) / 3};
  return extrapolate_up(base, bell_state(w, output_layout()), r);
}

ProtocolOutcome epl_extrapolate(double p, double pd, double r) {
  if (!(p >= 0 && p <= 1) || !(pd >= 0 && pd <= 1)) throw std::invalid_argument("epl parameters must lie in [0,1]");
  check_r(r);
  double q = p * p / 2;
  CMat eta = pd * bell_proj(0) + (1 - pd) * bell_proj(2);
  CMat sep = CMat::Zero(4, 4);
  sep(0, 0) = sep(3, 3) = 0.5;
  return outcome_from_state(q * eta + (1 - q) * r * sep);
}

double modified_filtering_optimal(double p, double ps) {
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("p must lie in (0,1]");
  if (!(ps > 0 && ps <= 1)) throw std::invalid_argument("p_succ must lie in (0,1]");
  if (p < 1 && p <= 2.0 / 3.0 && ps >= 3 * p * p / (4 * (1 - p))) return 0.5 * (1 + p * p / (4 * ps * (1 - p)));
  return 2 * p / (p + std::sqrt(p * p + 4 * ps * (1 - p)));
}

ProtocolOutcome dejmps_a(const Operator& single) {
  BellVec w = bell_coefficients(pauli_twirl(single));
  ProtocolOutcome d = dejmps_bell(w, w);
  // success of the first round, otherwise hand over the third copy
  CMat m = d.p_succ * d.output.mat() + (1 - d.p_succ) * single.mat();
  return outcome_from_state(m);
}

ProtocolOutcome dejmps_b(const Operator& single) {
  BellVec w = bell_coefficients(pauli_twirl(single));
  ProtocolOutcome d1 = dejmps_bell(w, w);
  ProtocolOutcome d2 = dejmps_bell(bell_coefficients(d1.output), w);
  return outcome_from_state(d2.output.mat() * (d1.p_succ * d2.p_succ));
}

ChoiProtocol to_choi(const KrausProtocol& proto) {
  ChoiProtocol c;
  c.alice = choi_of_kraus(proto.alice.ops, proto.alice.out, proto.alice.in);
  c.bob = choi_of_kraus(proto.bob.ops, proto.bob.out, proto.bob.in);
  c.rule = proto.rule;
  return c;
}

ChoiEval evaluate_choi(const Operator& rho, const std::vector<ChoiBranch>& alice,
                       const std::vector<ChoiBranch>& bob, FlagRule rule, int D) {
  CMat acc = CMat::Zero(D * D, D * D);
  for (const auto& a : alice)
    for (const auto& b : bob) {
      if (!flags_succeed(rule, a.flag, b.flag)) continue;
      ChoiBranch prod{1, kron(a.matrix, b.matrix), a.inputs};
      prod.inputs.insert(prod.inputs.end(), b.inputs.begin(), b.inputs.end());
      Operator r = permute_subsystems(rho, prod.inputs);
      acc += apply_via_choi(prod, r).mat();
    }
  ChoiEval e;
  e.p_succ = acc.trace().real();
  CMat v = max_entangled_vec(D);
  e.fidelity = e.p_succ > 0 ? (v.adjoint() * acc * v)(0, 0).real() / e.p_succ : 0.0;
  return e;
}

std::vector<CurvePoint> achievable_curve(const std::vector<NamedOutcome>& pts, const std::vector<double>& grid) {
  struct P {
    double p, n;
    std::string name;
  };
  std::vector<P> v{{0.0, 0.0, ""}};
  for (const auto& o : pts) {
    if (!(o.p_succ >= 0 && o.p_succ <= 1 + 1e-12)) throw std::invalid_argument("p_succ out of range for " + o.name);
    v.push_back({std::min(o.p_succ, 1.0), o.p_succ * o.fidelity, o.name});
  }
  std::vector<CurvePoint> out;
  for (double d : grid) {
    double best = -1;
    std::string src;
    // the upper hull at d is the best chord over pairs bracketing d
    for (const auto& a : v)
      for (const auto& b : v) {
        if (!(a.p <= d + 1e-15 && d <= b.p + 1e-15)) continue;
        double n = b.p - a.p > 1e-15 ? a.n + (b.n - a.n) * (d - a.p) / (b.p - a.p) : std::max(a.n, b.n);
        if (n > best + 1e-15) {
          best = n;
          if (a.name.empty() || a.name == b.name || b.p - a.p <= 1e-15) src = b.name.empty() ? a.name : b.name;
          else src = a.name + "+" + b.name;
        }
      }
    if (best < 0 || d <= 0) continue;
    out.push_back({d, best / d, src});
  }
  return out;
}

NamedOutcome named(const std::string& name, const ProtocolOutcome& o) { return {name, o.p_succ, o.fidelity}; }

ProtocolOutcome keep_copy(const Operator& copy, int D) {
  ProtocolOutcome o;
  o.p_succ = 1.0;
  o.output = Operator(output_layout(D), copy.mat());
  o.fidelity = fidelity_to_target(o.output, D);
  if (D != 2 || copy.dim() != 4) return o;
  // Alice may apply the Pauli that maps the dominant Bell state to Phi+
  for (int k = 1; k < 4; ++k) {
    CMat u = Eigen::kroneckerProduct(pauli(k), pauli(0)).eval();
    Operator c(output_layout(D), u * copy.mat() * u.adjoint());
    double f = fidelity_to_target(c, D);
    if (f > o.fidelity + 1e-15) {
      o.output = c;
      o.fidelity = f;
    }
  }
  return o;
}

ProtocolOutcome separable_on_failure(const ProtocolOutcome& base) {
  CMat sep = CMat::Zero(4, 4);
  sep(0, 0) = sep(3, 3) = 0.5;
  return outcome_from_state(base.p_succ * base.output.mat() + (1 - base.p_succ) * sep);
}

}  // namespace distil
