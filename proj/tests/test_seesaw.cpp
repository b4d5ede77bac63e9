#include <doctest.h>

#include <cmath>

#include "distil/bounds.hpp"
#include "distil/certificates.hpp"
#include "distil/seesaw.hpp"
#include "distil/states.hpp"

using namespace distil;

namespace {

void check_monotone(const SeesawState& s) {
  for (std::size_t i = 1; i < s.trajectory.size(); ++i)
    CHECK(s.trajectory[i].fidelity >= s.trajectory[i - 1].fidelity - 1e-9);
}

}  // namespace

TEST_CASE("identity protocol on a maximally entangled pair") {
  Operator phi = make_density(Layout({{"A1", Party::Alice, 2}, {"B1", Party::Bob, 2}}), max_entangled(2));
  ChoiProtocol id = to_choi(identity_protocol());
  ChoiEval e = evaluate_choi(phi, id.alice, id.bob, id.rule);
  CHECK(std::abs(e.fidelity - 1.0) < 1e-12);
  CHECK(std::abs(e.p_succ - 1.0) < 1e-12);
  SeesawStep st = seesaw_step(phi, id.bob, Side::Alice, FlagRule::Local, 1.0);
  REQUIRE(st.ok());
  CHECK(std::abs(st.fidelity - 1.0) < 1e-6);
  CHECK(std::abs(st.p_succ - 1.0) < 1e-6);
}

TEST_CASE("one step improves fixed filtering") {
  Operator rho = s_state(0.5);
  ProtocolOutcome f = filtering(rho, 0.3);
  ChoiProtocol c = to_choi(filtering_protocol(0.3));
  ChoiEval e = evaluate_choi(rho, c.alice, c.bob, c.rule);
  CHECK(std::abs(e.fidelity - f.fidelity) < 1e-10);
  CHECK(std::abs(e.p_succ - f.p_succ) < 1e-10);
  SeesawStep st = seesaw_step(rho, c.bob, Side::Alice, FlagRule::Local, f.p_succ);
  REQUIRE(st.ok());
  CHECK(st.fidelity >= f.fidelity - 1e-9);
  CHECK(std::abs(st.p_succ - f.p_succ) < 1e-6);
  CHECK(check_choi_branches(st.branches, 1e-7));
  BoundResult b = ppt_fidelity_bound(rho, 2, f.p_succ);
  CHECK(st.fidelity <= b.value + 1e-5);
}

TEST_CASE("seesaw from filtering reaches the PPT bound on an S state") {
  Operator rho = s_state(0.5);
  const double delta = 0.4;
  double eps = filtering_eps_for(rho, delta);
  CHECK(std::abs(filtering(rho, eps).p_succ - delta) < 1e-10);
  SeesawState s = seesaw_run(rho, filtering_protocol(eps));
  CHECK(s.status == "ok");
  REQUIRE(s.trajectory.size() >= 2);
  CHECK(s.trajectory.front().side == "init");
  check_monotone(s);
  BoundResult b = ppt_fidelity_bound(rho, 2, delta);
  REQUIRE(b.ok());
  CHECK(std::abs(s.fidelity() - b.value) < 1e-3);
  CHECK(s.fidelity() <= b.value + 1e-5);
  CHECK(std::abs(s.p_succ() - delta) < 1e-6);
  // the final branches are valid instruments and reproduce the reported point
  CHECK(check_choi_branches(s.alice, 1e-7));
  CHECK(check_choi_branches(s.bob, 1e-7));
  ChoiEval e = evaluate_choi(rho, s.alice, s.bob, s.rule);
  CHECK(std::abs(e.fidelity - s.fidelity()) < 1e-9);
  CHECK(std::abs(e.p_succ - s.p_succ()) < 1e-9);
}

TEST_CASE("optimal DEJMPS is a fixed point") {
  Operator rho = rank3_pair(0.7, 0.2);
  SeesawOptions o;
  o.max_iters = 6;
  SeesawState s = seesaw_run(rho, dejmps_protocol(), o);
  check_monotone(s);
  CHECK(std::abs(s.trajectory.front().fidelity - 0.49 / 0.58) < 1e-10);
  CHECK(std::abs(s.fidelity() - 0.49 / 0.58) < 1e-6);
  CHECK(std::abs(s.p_succ() - 0.58) < 1e-6);
}

TEST_CASE("nonlocal flag rule and Alice-first order") {
  Operator rho = s_state(0.5);
  SeesawOptions o;
  o.bob_first = false;
  o.max_iters = 4;
  KrausProtocol k = filtering_protocol(0.4);
  k.rule = FlagRule::Nonlocal;
  SeesawState s = seesaw_run(rho, k, o);
  CHECK(s.rule == FlagRule::Nonlocal);
  REQUIRE(s.trajectory.size() >= 2);
  CHECK(s.trajectory[1].side == "alice");
  check_monotone(s);
  BoundResult b = ppt_fidelity_bound(rho, 2, s.p_succ());
  CHECK(s.fidelity() <= b.value + 1e-5);
}

TEST_CASE("random starting protocols") {
  Operator rho = make_state(parse_state_spec("s:0.6;copies=2"));
  KrausProtocol a = random_protocol(rho, FlagRule::Local, 7), b = random_protocol(rho, FlagRule::Local, 7);
  REQUIRE(a.alice.ops.size() == b.alice.ops.size());
  for (std::size_t i = 0; i < a.alice.ops.size(); ++i) CHECK(a.alice.ops[i].k == b.alice.ops[i].k);
  ChoiProtocol c = to_choi(a);
  CHECK(check_choi_branches(c.alice));
  CHECK(check_choi_branches(c.bob));
  ChoiEval e = evaluate_choi(rho, c.alice, c.bob, c.rule);
  ProtocolOutcome sim = simulate(rho, a);
  CHECK(std::abs(e.p_succ - sim.p_succ) < 1e-10);
  CHECK(std::abs(e.fidelity - sim.fidelity) < 1e-10);
  KrausProtocol other = random_protocol(rho, FlagRule::Local, 8);
  CHECK(other.alice.ops[0].k != a.alice.ops[0].k);
}

TEST_CASE("seesaw rejects impossible success targets") {
  Operator rho = s_state(0.5);
  ChoiProtocol c = to_choi(filtering_protocol(0.3));
  SeesawStep st = seesaw_step(rho, c.bob, Side::Alice, FlagRule::Local, 1.0);
  // filtering on Bob caps the success probability below 1
  CHECK_FALSE(st.ok());
}
