#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "distil/bounds.hpp"
#include "distil/certificates.hpp"
#include "distil/protocols.hpp"
#include "distil/states.hpp"

using namespace distil;

namespace {

CMat gaussian(int r, int c, std::mt19937_64& g) {
  std::normal_distribution<double> nd;
  CMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(nd(g), nd(g));
  return m;
}

// Kraus family of a random channel: slices of a random isometry
std::vector<CMat> random_channel(int dout, int din, int n, std::mt19937_64& g) {
  Eigen::HouseholderQR<CMat> qr(gaussian(n * dout, din, g));
  CMat q = qr.householderQ() * CMat::Identity(n * dout, din);
  std::vector<CMat> ks;
  for (int k = 0; k < n; ++k) ks.push_back(q.middleRows(k * dout, dout));
  return ks;
}

CMat random_density(int n, std::mt19937_64& g) {
  CMat m = gaussian(n, n, g);
  CMat r = m * m.adjoint();
  return r / r.trace().real();
}

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

Operator state(const std::string& spec) { return make_state(parse_state_spec(spec)); }

}  // namespace

TEST_CASE("property: Choi round trip on random instruments") {
  std::mt19937_64 g(31);
  for (int t = 0; t < 20; ++t) {
    const int din = 2 + t % 3, dout = 2 + (t / 3) % 2;
    const int n = std::max(1 + t % 4, (din + dout - 1) / dout);
    auto ks = random_channel(dout, din, n, g);
    std::vector<KrausOp> flagged;
    for (int k = 0; k < n; ++k) flagged.push_back({k % 2, ks[k]});
    auto branches = choi_of_kraus(flagged, din);
    CHECK(check_choi_branches(branches));
    Operator rho(Layout({{"in", Party::Alice, din}}), random_density(din, g));
    CMat total = CMat::Zero(dout, dout);
    for (const auto& b : branches) {
      std::vector<CMat> sel;
      for (const auto& k : flagged)
        if (k.flag == b.flag) sel.push_back(k.k);
      CMat viaChoi = apply_via_choi(b, rho).mat();
      CHECK(max_abs(viaChoi - apply_kraus(sel, rho.mat())) < 1e-12);
      total += viaChoi;
    }
    CHECK(std::abs(total.trace().real() - 1.0) < 1e-12);
  }
}

TEST_CASE("property: PPT Choi matrix iff the transpose-conjugated map is completely positive") {
  std::mt19937_64 g(32);
  Layout out({{"Ao", Party::Alice, 2}, {"Bo", Party::Bob, 2}});
  Layout in({{"Ai", Party::Alice, 2}, {"Bi", Party::Bob, 2}});
  // partial transpose on Bob of a 4x4 operator on (A, B)
  auto gamma = [](const CMat& x) {
    return partial_transpose_matrix(x, Layout({{"A", Party::Alice, 2}, {"B", Party::Bob, 2}}), {"B"});
  };
  int ppt_count = 0, npt_count = 0;
  for (int t = 0; t < 24; ++t) {
    std::vector<CMat> ks;
    if (t % 2 == 0) {
      // local product channel: PPT
      auto ka = random_channel(2, 2, 2, g), kb = random_channel(2, 2, 2, g);
      for (const auto& a : ka)
        for (const auto& b : kb) ks.push_back(Eigen::kroneckerProduct(a, b).eval());
    } else {
      ks = random_channel(4, 4, 1 + t % 3, g);
    }
    std::vector<KrausOp> flagged;
    for (const auto& k : ks) flagged.push_back({0, k});
    Operator c = choi_of_kraus(flagged, out, in).front().matrix;
    // Choi matrix of X -> Gamma(Lambda(Gamma(X))), built from the definition
    CMat conj = CMat::Zero(16, 16);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        CMat e = CMat::Zero(4, 4);
        e(i, j) = 1.0;
        CMat img = gamma(apply_kraus(ks, gamma(e)));
        conj += Eigen::kroneckerProduct(img, e).eval() / 4.0;
      }
    CHECK(max_abs(conj - partial_transpose(c, {"Bo", "Bi"}).mat()) < 1e-12);
    const bool cp = min_eigenvalue(conj) > -1e-9;
    CHECK(cp == is_ppt(c));
    (cp ? ppt_count : npt_count)++;
  }
  // both branches of the equivalence are exercised
  CHECK(ppt_count >= 12);
  CHECK(npt_count >= 1);
}

TEST_CASE("property: U x U* twirl gives the two-block form") {
  std::mt19937_64 g(33);
  for (int d : {2, 3}) {
    Layout l({{"A1", Party::Alice, d}, {"B1", Party::Bob, d}});
    CMat phi = max_entangled(d);
    CMat id = CMat::Identity(d * d, d * d);
    for (int t = 0; t < 10; ++t) {
      Operator rho(l, random_density(d * d, g));
      double f = fidelity_to_target(rho, d);
      CMat expect = f * phi + (1 - f) * (id - phi) / double(d * d - 1);
      Operator tw = twirl(rho, d);
      CHECK(max_abs(tw.mat() - expect) < 1e-12);
      CHECK(std::abs(fidelity_to_target(tw, d) - f) < 1e-12);
    }
  }
}

TEST_CASE("property: weak duality on every solve") {
  std::vector<BoundResult> solves;
  for (const char* spec : {"iso:0.7;copies=2", "bell3:0.7,0.2,0.1;copies=2", "epl:0.5,0.8", "rr:0.8", "s:0.5",
                           "r:0.6,-"})
    for (double d : {0.1, 0.5, 1.0}) solves.push_back(ppt_fidelity_bound(state(spec), 2, d));
  solves.push_back(ppt_fidelity_bound_full(state("iso:0.7;copies=2"), 2, 0.4));
  solves.push_back(ppt_success_bound(state("bell3:0.7,0.2,0.1;copies=2"), 2, 0.8));
  solves.push_back(bse1_fidelity_bound(state("s:0.5"), 2, 0.4));
  solves.push_back(bse1_fidelity_bound(state("iso:0.8"), 2, 0.7));
  for (const auto& b : solves) {
    REQUIRE(b.ok());
    CHECK(b.primal.dual_objective - b.primal.primal_objective >= -1e-7);
    CHECK(b.dual_gap >= -1e-7);
  }
}

TEST_CASE("property: protocol points lie under the PPT bound") {
  struct Fixture {
    std::string spec;
    ProtocolOutcome point;
  };
  std::vector<Fixture> fx;
  for (std::string s : {"iso:0.7;copies=2", "bell3:0.7,0.2,0.1;copies=2", "bell3:0.6,0.25,0.1;copies=2",
                        "r:0.8;copies=2", "s:0.6;copies=2"}) {
    Operator rho = state(s);
    fx.push_back({s, dejmps(rho)});
    if (fidelity_to_target(copy_marginal(rho, 1), 2) > 0.5) fx.push_back({s, bbpssw(rho)});
    fx.push_back({s, epl_d(rho)});
    fx.push_back({s, keep_copy(copy_marginal(rho, 1))});
    fx.push_back({s, mix(0.5, dejmps(rho), keep_copy(copy_marginal(rho, 1)))});
  }
  for (std::string s : {"epl:0.8,1", "epl:0.5,0.8", "epl:0.7,0.9"}) {
    Operator rho = state(s);
    fx.push_back({s, epl_d(rho)});
    fx.push_back({s, separable_on_failure(epl_d(rho))});
  }
  for (std::string s : {"rr:0.8", "rr:0.4", "s:0.5", "s:0.2"}) {
    Operator rho = state(s);
    for (double eps : {0.2, 0.5, 0.9}) fx.push_back({s, filtering(rho, eps)});
  }
  for (double p : {0.8, 0.4})
    for (double d : {0.3, 0.7, 1.0}) {
      ProtocolOutcome o;
      o.p_succ = d;
      o.fidelity = modified_filtering_optimal(p, d);
      fx.push_back({"rr:" + std::to_string(p), o});
    }
  int checked = 0;
  for (const auto& f : fx) {
    if (f.point.p_succ < 1e-6) continue;
    BoundResult b = ppt_fidelity_bound(state(f.spec), 2, std::min(1.0, f.point.p_succ));
    REQUIRE(b.ok());
    CHECK_MESSAGE(f.point.fidelity <= b.value + 1e-5, f.spec << " at " << f.point.p_succ);
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("property: the symmetric extension bound is no looser than PPT") {
  for (const char* spec : {"s:0.5", "rr:0.4", "iso:0.8"})
    for (double d : {0.2, 0.6, 1.0}) {
      Operator rho = state(spec);
      BoundResult p = ppt_fidelity_bound(rho, 2, d), b = bse1_fidelity_bound(rho, 2, d);
      REQUIRE(p.ok());
      REQUIRE(b.ok());
      CHECK(b.value <= p.value + 1e-6);
    }
}
