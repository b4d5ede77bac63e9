#include "distil/certificates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "distil/states.hpp"

namespace distil {

BellParams bell_params(double p1, double p2, double p3) {
  const double p4 = 1.0 - p1 - p2 - p3;
  for (double x : {p1, p2, p3, p4})
    if (x < -1e-12) throw std::invalid_argument("Bell weights must lie in the probability simplex");
  BellParams b;
  b.p1 = p1;
  b.p2 = p2;
  b.p3 = p3;
  b.r1 = p1 + p2 - p3 - p4;
  b.r2 = -p1 + p2 + p3 - p4;
  b.r3 = p1 - p2 + p3 - p4;
  return b;
}

BellParams bell_params_from_r(double r1, double r2, double r3) {
  BellParams b;
  b.r1 = r1;
  b.r2 = r2;
  b.r3 = r3;
  b.p1 = (1 + r1 - r2 + r3) / 4;
  b.p2 = (1 + r1 + r2 - r3) / 4;
  b.p3 = (1 - r1 + r2 + r3) / 4;
  return b;
}

namespace {

const Layout& pair_layout() {
  static const Layout l({{"A1", Party::Alice, 2}, {"B1", Party::Bob, 2}, {"A2", Party::Alice, 2}, {"B2", Party::Bob, 2}});
  return l;
}

const std::vector<std::string> kCanon{"A1", "A2", "B1", "B2"};

// w index -> Bell index pairs (i, j) of copy 1 and copy 2
const std::array<std::array<int, 2>, 10> kPairs{{{0, 0}, {0, 1}, {1, 1}, {2, 2}, {0, 2}, {1, 2}, {3, 3}, {0, 3}, {1, 3}, {2, 3}}};

CMat bell_pair(int i, int j) { return Eigen::kroneckerProduct(bell_proj(i), bell_proj(j)).eval(); }

}  // namespace

Operator bell_dual_matrix(const BellDualV& v) {
  CMat m = CMat::Zero(16, 16);
  for (int k = 0; k < 10; ++k) {
    auto [i, j] = kPairs[k];
    m += v.w[k] * bell_pair(i, j);
    if (i != j) m += v.w[k] * bell_pair(j, i);
  }
  return permute_subsystems(Operator(pair_layout(), m), kCanon);
}

std::map<std::string, double> v_coords(const Operator& v) {
  Operator op = permute_subsystems(v, {"A1", "B1", "A2", "B2"});
  auto str = [&](int a, int b) {
    CMat p = Eigen::kroneckerProduct(Eigen::kroneckerProduct(pauli(a), pauli(a)).eval(),
                                     Eigen::kroneckerProduct(pauli(b), pauli(b)).eval())
                 .eval();
    return (p * op.mat()).trace().real();
  };
  return {{"v0", str(0, 0)},  {"v1", str(0, 1)},  {"v2", str(0, 2)},  {"v3", str(0, 3)},  {"v11", str(1, 1)},
          {"v12", str(1, 2)}, {"v13", str(1, 3)}, {"v22", str(2, 2)}, {"v23", str(2, 3)}};
}

std::array<double, 3> pt_invariance_terms(const BellDualV& v) {
  const auto& w = v.w;
  return {-w[0] + w[2] + w[3] + 2 * w[5] - w[6] - 2 * w[7], -w[0] + w[2] - w[3] + 2 * w[4] + w[6] - 2 * w[8],
          -w[0] + 2 * w[1] - w[2] + w[3] + w[6] - 2 * w[9]};
}

Operator rank3_pair(double p1, double p2) { return tensor_copies(bell_diag(p1, p2, 1.0 - p1 - p2), 2); }

double dejmps_rank3_success(double p1) { return p1 * p1 + (1 - p1) * (1 - p1); }
double dejmps_rank3_fidelity(double p1) { return p1 * p1 / dejmps_rank3_success(p1); }

namespace {

void check_regime(double p1, double p2) {
  const double p3 = 1.0 - p1 - p2;
  if (!(p1 > 0.5)) throw std::invalid_argument("certificate needs p1 > 0.5");
  if (!(p1 > p2)) throw std::invalid_argument("certificate needs p1 > p2");
  if (p2 < p3 - 1e-15) throw std::invalid_argument("certificate needs p2 >= 1 - p1 - p2");
  if (p3 < -1e-15) throw std::invalid_argument("certificate needs p1 + p2 <= 1");
}

DualCertificate empty_cert(const Operator& rho) {
  DualCertificate c;
  c.layout = rho.layout();
  const int n = rho.dim();
  c.J = c.G = c.H = c.K = CMat::Zero(n, n);
  return c;
}

}  // namespace

DualCertificate dejmps_fidelity_certificate(double p1, double p2, double delta) {
  check_regime(p1, p2);
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("delta must lie in (0, 1]");
  const double p3 = 1.0 - p1 - p2;
  const double f = dejmps_rank3_fidelity(p1);
  Operator rho = rank3_pair(p1, p2);
  const double ab = 16.0;
  BellDualV v;
  v.w = {f * (1 - p1) * (1 - p1), f * (1 - p1) * p2, f * p2 * p2, f * p3 * p3, f * (1 - p1) * p3, f * p2 * p3, 0, 0, 0, 0};
  DualCertificate c = empty_cert(rho);
  c.y = f / delta;
  c.H = bell_dual_matrix(v).mat() * (ab / delta);
  return c;
}

DualCertificate dejmps_success_certificate(double p1, double p2) {
  check_regime(p1, p2);
  if (p1 < 0.505) throw std::invalid_argument("success certificate guarded to p1 >= 0.505 (s diverges at p1 = 0.5)");
  const double p3 = 1.0 - p1 - p2;
  const double n = dejmps_rank3_success(p1);
  const double q = 2 * p1 - 1;
  const double ab = 16.0;
  Operator rho = rank3_pair(p1, p2);
  BellDualV r;
  r.w = {p1 * p1, 0, p2 * p2, p3 * p3, 0, p2 * p3, 0, 0, 0, 0};
  BellDualV v;
  const double a = p1 * p1;
  v.w = {(1 - p1) * a / q,        a * p2 / q, a * p2 * p2 / ((1 - p1) * q), a * p3 * p3 / ((1 - p1) * q),
         a * p3 / q,              a * p2 * p3 / ((1 - p1) * q), 0, 0, 0, 0};
  DualCertificate c = empty_cert(rho);
  c.J = bell_dual_matrix(r).mat() * ab;
  c.y = ab * (-n / ((1 - p1) * q));
  c.H = bell_dual_matrix(v).mat() * ab;
  return c;
}

EplBlocks epl_block_decomposition(double p, double pd) {
  if (p < 0 || p > 1 || pd < 0 || pd > 1) throw std::invalid_argument("p and p_d must lie in [0, 1]");
  const double a = p * p / 4, b = (1 - p) * p / 2, c = (1 - p) * (1 - p), d = 2 * pd - 1;
  Layout l({{"A1", Party::Alice, 2}, {"A2", Party::Alice, 2}, {"B1", Party::Bob, 2}, {"B2", Party::Bob, 2}});
  CMat L = CMat::Zero(16, 16), I = CMat::Zero(16, 16), F = CMat::Zero(16, 16);
  L(3, 3) = a;
  L(11, 11) = b;
  L(12, 12) = a;
  L(13, 13) = b;
  L(14, 14) = b;
  L(15, 15) = c;
  I(7, 7) = b;
  F(6, 6) = a;
  F(9, 9) = a;
  F(6, 9) = F(9, 6) = a * d;
  EplBlocks r;
  r.weight_l = L.trace().real();
  r.weight_i = I.trace().real();
  r.weight_f = F.trace().real();
  auto norm = [&](const CMat& m, double w) {
    if (w > 0) return Operator(l, m / w);
    // empty block: any state is a valid conditional; keep it maximally mixed on the block's support
    return Operator(l, CMat::Identity(16, 16) / 16.0);
  };
  r.rho_l = norm(L, r.weight_l);
  r.rho_i = norm(I, r.weight_i);
  r.rho_f = norm(F, r.weight_f);
  // |01>_A -> |0>, |10>_A -> |1>, |01>_B -> |1>, |10>_B -> |0>
  const int acode[2] = {1, 2}, bcode[2] = {2, 1};
  CMat rf(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      rf(i, j) = r.rho_f.mat()(acode[i >> 1] * 4 + bcode[i & 1], acode[j >> 1] * 4 + bcode[j & 1]);
  r.rho_f_relabeled = Operator(Layout({{"A1", Party::Alice, 2}, {"B1", Party::Bob, 2}}), rf);
  return r;
}

double binary_entropy(double x) {
  if (x < 0 || x > 1) throw std::invalid_argument("binary entropy argument must lie in [0, 1]");
  auto t = [](double v) { return v <= 0 ? 0.0 : -v * std::log2(v); };
  return t(x) + t(1 - x);
}

double relative_entropy(const Operator& rho, const Operator& sigma) {
  if (!(rho.layout() == sigma.layout())) throw std::invalid_argument("relative entropy needs equal layouts");
  if (!is_density(rho) || !is_density(sigma)) throw std::invalid_argument("relative entropy needs density matrices");
  constexpr double floor = 1e-14;
  Eigen::SelfAdjointEigenSolver<CMat> er(rho.mat()), es(sigma.mat());
  double s = 0;
  for (int i = 0; i < er.eigenvalues().size(); ++i) {
    double l = er.eigenvalues()(i);
    if (l > floor) s += l * std::log2(l);
  }
  const CMat& vs = es.eigenvectors();
  for (int j = 0; j < es.eigenvalues().size(); ++j) {
    double w = (vs.col(j).adjoint() * rho.mat() * vs.col(j))(0, 0).real();
    double l = es.eigenvalues()(j);
    if (l <= floor) {
      if (w > 1e-9) return std::numeric_limits<double>::infinity();
      continue;
    }
    s -= w * std::log2(l);
  }
  return s;
}

Operator sep_guess_state(double p) {
  if (p < 0 || p > 1) throw std::invalid_argument("p must lie in [0, 1]");
  CMat podd = CMat::Zero(4, 4);
  podd(1, 1) = podd(2, 2) = 1;
  CMat p11 = CMat::Zero(4, 4);
  p11(3, 3) = 1;
  using Eigen::kroneckerProduct;
  CMat m = p * p / 4 * CMat(kroneckerProduct(podd, podd)) +
           (1 - p) * p / 2 * CMat(CMat(kroneckerProduct(p11, podd)) + CMat(kroneckerProduct(podd, p11))) +
           (1 - p) * (1 - p) * CMat(kroneckerProduct(p11, p11));
  return permute_subsystems(Operator(pair_layout(), m), kCanon);
}

}  // namespace distil
