#include <doctest.h>

#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "distil/qmath.hpp"

using namespace distil;

namespace {

Layout ab(int da = 2, int db = 2) { return Layout({{"A1", Party::Alice, da}, {"B1", Party::Bob, db}}); }

CMat random_density(int n, std::mt19937_64& g) {
  std::normal_distribution<double> nd;
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(nd(g), nd(g));
  CMat r = m * m.adjoint();
  return r / r.trace().real();
}

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("layout bookkeeping") {
  Layout l({{"A1", Party::Alice, 2}, {"A2", Party::Alice, 3}, {"B1", Party::Bob, 2}});
  CHECK(l.total_dim() == 12);
  CHECK(l.party_dim(Party::Alice) == 6);
  CHECK(l.party_dim(Party::Bob) == 2);
  CHECK(l.index_of("A2") == 1);
  CHECK(l.labels_of(Party::Bob) == std::vector<std::string>{"B1"});
  CHECK_THROWS_AS(Layout({{"A1", Party::Alice, 2}, {"A1", Party::Bob, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(Layout({{"A1", Party::Alice, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(l.dim_of("C"), std::invalid_argument);
}

TEST_CASE("operator construction rejects bad matrices") {
  CMat m = CMat::Zero(4, 4);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(Operator(ab(), m), std::invalid_argument);
  CHECK_THROWS_AS(Operator(ab(), CMat::Identity(3, 3)), std::invalid_argument);
  CHECK_THROWS_AS(make_density(ab(), CMat::Identity(4, 4)), std::invalid_argument);
  CMat neg = CMat::Identity(4, 4) * 0.5;
  neg(0, 0) = -0.5;
  CHECK_THROWS_AS(make_density(ab(), neg), std::invalid_argument);
  CHECK_NOTHROW(make_density(ab(), CMat::Identity(4, 4) / 4.0));
}

TEST_CASE("partial trace of a product state") {
  std::mt19937_64 g(1);
  CMat a = random_density(2, g), b = random_density(3, g);
  Operator rho(ab(2, 3), Eigen::kroneckerProduct(a, b).eval());
  CHECK(max_abs(partial_trace(rho, {"A1"}).mat() - a) < 1e-13);
  CHECK(max_abs(partial_trace(rho, {"B1"}).mat() - b) < 1e-13);
  CHECK(std::abs(partial_trace(rho, {}).mat()(0, 0).real() - 1.0) < 1e-13);
}

TEST_CASE("partial transpose of the maximally entangled state is swap / d") {
  for (int d : {2, 3}) {
    Operator phi = max_entangled(d, "A1", "B1");
    CMat pt = partial_transpose(phi).mat();
    auto [s, a] = sym_antisym_projectors(d);
    CHECK(max_abs(pt - (s.mat() - a.mat()) / double(d)) < 1e-13);
    CHECK(std::abs(min_eigenvalue(pt) + 1.0 / d) < 1e-12);
    CHECK_FALSE(is_ppt(phi));
  }
  CHECK(is_ppt(Operator(ab(), CMat::Identity(4, 4) / 4.0)));
}

TEST_CASE("partial transpose is an involution and preserves trace") {
  std::mt19937_64 g(2);
  Layout l({{"A1", Party::Alice, 2}, {"A2", Party::Alice, 2}, {"B1", Party::Bob, 2}, {"B2", Party::Bob, 2}});
  Operator rho(l, random_density(16, g));
  Operator t = partial_transpose(rho);
  CHECK(std::abs(t.trace() - 1.0) < 1e-13);
  CHECK(max_abs(partial_transpose(t).mat() - rho.mat()) < 1e-14);
  Operator tb1 = partial_transpose(partial_transpose(rho, {"B1"}), {"B2"});
  CHECK(max_abs(tb1.mat() - t.mat()) < 1e-14);
}

TEST_CASE("permuting subsystems commutes with kron") {
  std::mt19937_64 g(3);
  CMat a = random_density(2, g), b = random_density(3, g);
  Operator oa(Layout({{"X", Party::Alice, 2}}), a), ob(Layout({{"Y", Party::Bob, 3}}), b);
  Operator xy = kron(oa, ob), yx = kron(ob, oa);
  CHECK(max_abs(permute_subsystems(xy, {"Y", "X"}).mat() - yx.mat()) < 1e-14);
  CHECK(permute_subsystems(xy, {"Y", "X"}).layout() == yx.layout());
  CHECK_THROWS_AS(permute_subsystems(xy, {"X"}), std::invalid_argument);
  CHECK_THROWS_AS(permute_subsystems(xy, {"X", "X"}), std::invalid_argument);
}

TEST_CASE("fidelity to the maximally entangled target") {
  CHECK(std::abs(fidelity_to_target(max_entangled(2, "A", "B"), 2) - 1.0) < 1e-14);
  CHECK(std::abs(fidelity_to_target(Operator(ab(), CMat::Identity(4, 4) / 4.0), 2) - 0.25) < 1e-14);
  CHECK_THROWS_AS(fidelity_to_target(Operator(ab(2, 3), CMat::Identity(6, 6) / 6.0), 2), std::invalid_argument);
}

TEST_CASE("U x U* twirl leaves the two-block form") {
  std::mt19937_64 g(4);
  Operator rho(ab(), random_density(4, g));
  Operator t = twirl(rho, 2);
  double f = fidelity_to_target(rho, 2);
  CMat phi = max_entangled(2);
  CMat expect = f * phi + (1 - f) * (CMat::Identity(4, 4) - phi) / 3.0;
  CHECK(max_abs(t.mat() - expect) < 1e-12);
  CHECK(max_abs(twirl(t, 2).mat() - t.mat()) < 1e-12);
}

TEST_CASE("Pauli twirl keeps the Bell diagonal") {
  std::mt19937_64 g(5);
  Operator rho(ab(), random_density(4, g));
  Operator t = pauli_twirl(rho);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      cplx v = (bell_vec(i).adjoint() * t.mat() * bell_vec(j))(0, 0);
      cplx w = (bell_vec(i).adjoint() * rho.mat() * bell_vec(j))(0, 0);
      if (i == j) CHECK(std::abs(v - w) < 1e-13);
      else CHECK(std::abs(v) < 1e-13);
    }
}

TEST_CASE("Choi round trip reproduces the Kraus action") {
  std::mt19937_64 g(6);
  std::normal_distribution<double> nd;
  CMat m(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = cplx(nd(g), nd(g));
  Eigen::HouseholderQR<CMat> qr(m);
  CMat q = qr.householderQ() * CMat::Identity(6, 3);
  std::vector<KrausOp> ks{{1, q.topRows(2)}, {0, q.middleRows(2, 2)}, {1, q.bottomRows(2)}};
  auto bs = choi_of_kraus(ks, 3);
  REQUIRE(bs.size() == 2);
  CHECK(check_choi_branches(bs));
  CMat rho = random_density(3, g);
  Operator r(Layout({{"in", Party::Alice, 3}}), rho);
  for (const auto& b : bs) {
    std::vector<CMat> sel;
    for (const auto& k : ks)
      if (k.flag == b.flag) sel.push_back(k.k);
    CHECK(max_abs(apply_via_choi(b, r).mat() - apply_kraus(sel, rho)) < 1e-12);
  }
  std::vector<KrausOp> bad{{1, q.topRows(2)}};
  CHECK_THROWS_AS(choi_of_kraus(bad, 3), std::invalid_argument);
}

TEST_CASE("symmetric and antisymmetric projectors") {
  for (int d : {2, 3, 4}) {
    auto [s, a] = sym_antisym_projectors(d);
    CHECK(std::abs(s.trace() - d * (d + 1) / 2.0) < 1e-12);
    CHECK(std::abs(a.trace() - d * (d - 1) / 2.0) < 1e-12);
    CHECK(max_abs(s.mat() * s.mat() - s.mat()) < 1e-12);
    CHECK(max_abs(s.mat() * a.mat()) < 1e-12);
  }
}

TEST_CASE("psd clip and eigen helpers") {
  CMat m = CMat::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1e-6;
  CHECK(min_eigenvalue(psd_clip(m)) >= 0.0);
  CHECK(std::abs(psd_clip(m)(0, 0).real() - 1.0) < 1e-15);
  CHECK(std::abs(min_eigenvalue(m) + 1e-6) < 1e-15);
}

TEST_CASE("operator JSON round trip is exact") {
  std::mt19937_64 g(7);
  Operator rho(ab(), random_density(4, g));
  nlohmann::json j = to_json(rho);
  Operator back = operator_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.layout() == rho.layout());
  CHECK(max_abs(back.mat() - rho.mat()) == 0.0);
  CHECK(j.contains("re"));
  CHECK(j.contains("im"));
  CHECK(j.contains("layout"));
}
