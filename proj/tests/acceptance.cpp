// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "distil/bounds.hpp"
#include "distil/certificates.hpp"
#include "distil/protocols.hpp"
#include "distil/seesaw.hpp"
#include "distil/states.hpp"

using namespace distil;

namespace {

using Clock = std::chrono::steady_clock;

// every bound solved in this run, for the weak duality check
std::vector<BoundResult> g_solves;

BoundResult keep(BoundResult b) {
  g_solves.push_back(b);
  return b;
}

std::vector<BoundResult> keep(std::vector<BoundResult> bs) {
  g_solves.insert(g_solves.end(), bs.begin(), bs.end());
  return bs;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Report {
  int failed = 0;
  void line(int n, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d %s: %s (%s)\n", n, ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Operator state(const std::string& s) { return make_state(parse_state_spec(s)); }

CMat random_real_density(int n, std::mt19937_64& g) {
  std::normal_distribution<double> nd;
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = nd(g);
  CMat r = m * m.adjoint();
  return r / r.trace().real();
}

BellVec random_sorted_bell(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BellVec w;
  w[0] = 0.5 + 0.5 * u(g);
  double a = u(g), b = u(g), c = u(g), s = a + b + c;
  w[1] = (1 - w[0]) * a / s;
  w[2] = (1 - w[0]) * b / s;
  w[3] = (1 - w[0]) * c / s;
  std::sort(w.begin() + 1, w.end(), std::greater<>());
  return w;
}

void criterion1(Report& r) {
  auto t0 = Clock::now();
  Operator rho = state("bell3:0.7,0.2,0.1;copies=2");
  const double f_dj = 0.49 / 0.58;
  BoundResult f = keep(ppt_fidelity_bound(rho, 2, 0.58));
  BoundResult s = keep(ppt_success_bound(rho, 2, f_dj));
  ProtocolOutcome dj = dejmps(rho);
  std::vector<double> grid;
  for (double d : default_delta_grid())
    if (d >= 0.58) grid.push_back(d);
  auto bounds = keep(fidelity_bound_sweep(BoundMethod::Ppt, rho, 2, grid, jobs()));
  double worst = 0;
  bool all_ok = f.ok() && s.ok();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    all_ok = all_ok && bounds[i].ok();
    double rr = (1 - grid[i]) / (1 - dj.p_succ);
    ProtocolOutcome x = extrapolate_up(dj, copy_marginal(rho, 1), rr);
    worst = std::max(worst, std::abs(x.fidelity - bounds[i].value));
  }
  double secs = seconds_since(t0);
  bool ok = all_ok && std::abs(f.value - f_dj) < 1e-5 && std::abs(f.value - 0.844828) < 1e-5 &&
            std::abs(s.value - 0.58) < 1e-4 && worst < 1e-4 && secs <= 120;
  r.line(1, "DEJMPS optimality", ok,
         fmt("F(0.58)=%.9f, p(F=0.49/0.58)=%.7f, max |extrapolation - PPT| over delta>=0.58 = %.2e, %.1f s", f.value,
             s.value, worst, secs));
}

void criterion2(Report& r) {
  BoundResult b = keep(ppt_fidelity_bound(state("iso:0.7;copies=2"), 2, 1.0));
  r.line(2, "no deterministic distillation for two isotropic copies", b.ok() && b.value <= 0.775 + 1e-6,
         fmt("F(delta=1)=%.9f, limit 0.775001", b.value));
}

void criterion3(Report& r) {
  auto t0 = Clock::now();
  Operator rho = state("iso:0.7;copies=2");
  const int dim = bse1_variable_dim(rho, 2);
  auto grid = default_delta_grid();
  auto ppt = keep(fidelity_bound_sweep(BoundMethod::Ppt, rho, 2, grid, jobs()));
  auto bse = keep(fidelity_bound_sweep(BoundMethod::Bse1, rho, 2, grid, jobs()));
  double worst_excess = -1e9, best_gap_low = 0;
  bool all_ok = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    all_ok = all_ok && ppt[i].ok() && bse[i].ok();
    worst_excess = std::max(worst_excess, bse[i].value - ppt[i].value);
    if (grid[i] < 0.5) best_gap_low = std::max(best_gap_low, ppt[i].value - bse[i].value);
  }
  double secs = seconds_since(t0);
  bool ok = all_ok && dim == 288 && worst_excess <= 1e-6 && best_gap_low >= 1e-3 && secs <= 1800;
  r.line(3, "1-BSE tightness", ok,
         fmt("W_s dim %.0f, max(BSE1-PPT)=%.2e, max(PPT-BSE1) for delta<0.5 = %.4f, %.0f s for 40 points", dim,
             worst_excess, best_gap_low, secs));
}

void criterion4(Report& r) {
  BoundResult a = keep(ppt_fidelity_bound(state("epl:0.8,1"), 2, 0.32));
  BoundResult b = keep(ppt_fidelity_bound(state("epl:0.5,0.8"), 2, 0.125));
  double worst = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double p = 0.2 + 0.2 * i, pd = 0.5 + 0.125 * j;
      double lhs = relative_entropy(epl_integrated(p, pd), sep_guess_state(p));
      worst = std::max(worst, std::abs(lhs - p * p / 2 * (1 - binary_entropy(pd))));
    }
  bool ok = a.ok() && b.ok() && std::abs(a.value - 1) < 1e-5 && std::abs(b.value - 0.8) < 1e-5 && worst < 1e-8;
  r.line(4, "EPL optimality", ok,
         fmt("F(epl 0.8,1; 0.32)=%.9f, F(epl 0.5,0.8; 0.125)=%.9f, relative entropy identity max err %.2e", a.value,
             b.value, worst));
}

void criterion5(Report& r) {
  double worst = 0;
  bool all_ok = true;
  auto grid = default_delta_grid();
  for (double p : {0.8, 0.4}) {
    auto bs = keep(fidelity_bound_sweep(BoundMethod::Ppt, rotated_r(p), 2, grid, jobs()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      all_ok = all_ok && bs[i].ok();
      worst = std::max(worst, std::abs(modified_filtering_optimal(p, grid[i]) - bs[i].value));
    }
  }
  double at1 = modified_filtering_optimal(0.4, 1.0);
  BoundResult b1 = keep(ppt_fidelity_bound(rotated_r(0.4), 2, 1.0));
  bool ok = all_ok && worst < 1e-4 && std::abs(at1 - 0.533333) < 1e-6 && std::abs(b1.value - 0.533333) < 1e-6;
  r.line(5, "R-state filtering optimality", ok,
         fmt("max |modified filtering - PPT| = %.2e over p in {0.8,0.4}, p=0.4 delta=1: %.9f / PPT %.9f", worst, at1,
             b1.value));
}

void criterion6(Report& r) {
  Operator rho = s_state(0.5);
  double worst = 0, worst_drop = 0;
  bool all_ok = true;
  for (double delta : {0.2, 0.4, 0.6, 0.8}) {
    SeesawState s = seesaw_run(rho, filtering_protocol(filtering_eps_for(rho, delta)));
    BoundResult b = keep(ppt_fidelity_bound(rho, 2, s.p_succ()));
    all_ok = all_ok && s.status == "ok" && b.ok() && std::abs(s.p_succ() - delta) < 1e-6;
    worst = std::max(worst, std::abs(b.value - s.fidelity()));
    for (std::size_t i = 1; i < s.trajectory.size(); ++i)
      worst_drop = std::max(worst_drop, s.trajectory[i - 1].fidelity - s.trajectory[i].fidelity);
  }
  bool ok = all_ok && worst < 1e-3 && worst_drop <= 1e-9;
  r.line(6, "seesaw reaches the bound", ok,
         fmt("S state p=0.5 at delta in {0.2,0.4,0.6,0.8}: max |seesaw - PPT| = %.2e, max trajectory drop %.2e",
             worst, worst_drop));
}

void criterion7(Report& r) {
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Layout l({{"A1", Party::Alice, 2}, {"A2", Party::Alice, 2}, {"B1", Party::Bob, 2}, {"B2", Party::Bob, 2}});
  double worst_sdp = 0;
  bool all_ok = true;
  for (int t = 0; t < 10; ++t) {
    Operator rho = make_density(l, random_real_density(16, g));
    double d = u(g);
    BoundResult a = keep(ppt_fidelity_bound(rho, 2, d)), b = keep(ppt_fidelity_bound_full(rho, 2, d));
    all_ok = all_ok && a.ok() && b.ok();
    worst_sdp = std::max(worst_sdp, std::abs(a.value - b.value));
  }
  double worst_proto = 0;
  KrausProtocol circ = dejmps_protocol(2);
  for (int t = 0; t < 100; ++t) {
    BellVec w1 = random_sorted_bell(g), w2 = random_sorted_bell(g);
    Operator c1 = bell_diag(w1[0], w1[1], w1[2]), c2 = bell_diag(w2[0], w2[1], w2[2]);
    Operator pair = permute_subsystems(kron(relabel_copy(c1, 1), relabel_copy(c2, 2)), {"A1", "A2", "B1", "B2"});
    ProtocolOutcome f = dejmps_bell(w1, w2), c = simulate(pair, circ);
    worst_proto = std::max({worst_proto, std::abs(f.p_succ - c.p_succ), std::abs(f.fidelity - c.fidelity),
                            (f.output.mat() - c.output.mat()).cwiseAbs().maxCoeff()});
  }
  bool ok = all_ok && worst_sdp < 1e-5 && worst_proto < 1e-10;
  r.line(7, "symmetry reduction and formula oracles", ok,
         fmt("full vs reduced max diff %.2e on 10 random states, DEJMPS formula vs circuit max diff %.2e on 100 inputs",
             worst_sdp, worst_proto));
}

void criterion8(Report& r) {
  std::mt19937_64 g(8);
  std::normal_distribution<double> nd;
  auto gauss = [&](int rows, int cols) {
    CMat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = cplx(nd(g), nd(g));
    return m;
  };
  auto channel = [&](int dout, int din, int n) {
    Eigen::HouseholderQR<CMat> qr(gauss(n * dout, din));
    CMat q = qr.householderQ() * CMat::Identity(n * dout, din);
    std::vector<CMat> ks;
    for (int k = 0; k < n; ++k) ks.push_back(q.middleRows(k * dout, dout));
    return ks;
  };
  auto density = [&](int n) {
    CMat m = gauss(n, n);
    CMat x = m * m.adjoint();
    return CMat(x / x.trace().real());
  };

  // Choi round trip
  double choi_err = 0;
  for (int t = 0; t < 10; ++t) {
    int din = 2 + t % 3;
    auto ks = channel(2, din, 2 + t % 2);
    std::vector<KrausOp> flagged;
    for (std::size_t k = 0; k < ks.size(); ++k) flagged.push_back({int(k % 2), ks[k]});
    Operator rho(Layout({{"in", Party::Alice, din}}), density(din));
    for (const auto& b : choi_of_kraus(flagged, din)) {
      std::vector<CMat> sel;
      for (const auto& k : flagged)
        if (k.flag == b.flag) sel.push_back(k.k);
      choi_err = std::max(choi_err, (apply_via_choi(b, rho).mat() - apply_kraus(sel, rho.mat())).cwiseAbs().maxCoeff());
    }
  }

  // PPT Choi matrix <-> transpose-conjugated map is completely positive
  Layout out({{"Ao", Party::Alice, 2}, {"Bo", Party::Bob, 2}}), in({{"Ai", Party::Alice, 2}, {"Bi", Party::Bob, 2}});
  Layout ab({{"A", Party::Alice, 2}, {"B", Party::Bob, 2}});
  int lemma_bad = 0, npt_seen = 0;
  for (int t = 0; t < 12; ++t) {
    std::vector<CMat> ks;
    if (t % 2 == 0) {
      for (const auto& a : channel(2, 2, 2))
        for (const auto& b : channel(2, 2, 2)) ks.push_back(Eigen::kroneckerProduct(a, b).eval());
    } else {
      ks = channel(4, 4, 1 + t % 3);
    }
    std::vector<KrausOp> flagged;
    for (const auto& k : ks) flagged.push_back({0, k});
    Operator c = choi_of_kraus(flagged, out, in).front().matrix;
    CMat conj = CMat::Zero(16, 16);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        CMat e = CMat::Zero(4, 4);
        e(i, j) = 1.0;
        CMat img = partial_transpose_matrix(apply_kraus(ks, partial_transpose_matrix(e, ab, {"B"})), ab, {"B"});
        conj += Eigen::kroneckerProduct(img, e).eval() / 4.0;
      }
    bool cp = min_eigenvalue(conj) > -1e-9;
    if (!cp) ++npt_seen;
    if (cp != is_ppt(c) || (conj - partial_transpose(c, {"Bo", "Bi"}).mat()).cwiseAbs().maxCoeff() > 1e-12)
      ++lemma_bad;
  }

  // twirl two-block form
  double twirl_err = 0;
  for (int d : {2, 3}) {
    Layout l({{"A1", Party::Alice, d}, {"B1", Party::Bob, d}});
    for (int t = 0; t < 5; ++t) {
      Operator rho(l, density(d * d));
      double f = fidelity_to_target(rho, d);
      CMat phi = max_entangled(d);
      CMat expect = f * phi + (1 - f) * (CMat::Identity(d * d, d * d) - phi) / double(d * d - 1);
      twirl_err = std::max(twirl_err, (twirl(rho, d).mat() - expect).cwiseAbs().maxCoeff());
    }
  }

  // sandwich over protocol fixtures
  double worst_sandwich = -1e9;
  int fixtures = 0;
  auto sandwich = [&](const std::string& spec, const ProtocolOutcome& o) {
    if (o.p_succ < 1e-6) return;
    BoundResult b = keep(ppt_fidelity_bound(state(spec), 2, std::min(1.0, o.p_succ)));
    worst_sandwich = std::max(worst_sandwich, b.ok() ? o.fidelity - b.value : 1.0);
    ++fixtures;
  };
  for (std::string s : {"iso:0.7;copies=2", "bell3:0.7,0.2,0.1;copies=2", "bell3:0.7,0.15,0.1;copies=2",
                        "r:0.8;copies=2", "s:0.6;copies=2"}) {
    Operator rho = state(s);
    ProtocolOutcome kc = keep_copy(copy_marginal(rho, 1));
    sandwich(s, dejmps(rho));
    sandwich(s, epl_d(rho));
    sandwich(s, kc);
    sandwich(s, mix(0.5, dejmps(rho), kc));
  }
  sandwich("iso:0.7;copies=3", dejmps_a(isotropic(0.7)));
  sandwich("iso:0.7;copies=3", dejmps_b(isotropic(0.7)));
  for (std::string s : {"epl:0.8,1", "epl:0.5,0.8"}) sandwich(s, epl_d(state(s)));
  for (std::string s : {"rr:0.8", "rr:0.4", "s:0.5"})
    for (double eps : {0.2, 0.5, 0.9}) sandwich(s, filtering(state(s), eps));

  // weak duality on every solve made in this run
  double worst_dual = 1e9;
  for (const auto& b : g_solves)
    if (b.ok()) worst_dual = std::min(worst_dual, b.primal.dual_objective - b.primal.primal_objective);

  bool ok = choi_err < 1e-12 && lemma_bad == 0 && npt_seen > 0 && twirl_err < 1e-12 && worst_sandwich <= 1e-5 &&
            worst_dual >= -1e-7;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "Choi err %.1e, PPT lemma mismatches %d, twirl err %.1e, max(F_protocol - bound) %.2e over %d "
                "fixtures, min(d - p) %.2e over %zu solves",
                choi_err, lemma_bad, twirl_err, worst_sandwich, fixtures, worst_dual, g_solves.size());
  r.line(8, "property suites", ok, buf);
}

}  // namespace

int main() {
  Report r;
  const std::vector<std::function<void(Report&)>> all{criterion1, criterion2, criterion3, criterion4,
                                                      criterion5, criterion6, criterion7, criterion8};
  for (std::size_t i = 0; i < all.size(); ++i) {
    try {
      all[i](r);
    } catch (const std::exception& e) {
      r.line(static_cast<int>(i + 1), "exception", false, e.what());
    }
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - r.failed, all.size());
  return r.failed == 0 ? 0 : 1;
}
