#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distil/protocols.hpp"
#include "distil/qmath.hpp"

namespace distil {

enum class Side { Alice, Bob };
std::string to_string(Side s);

struct SeesawPoint {
  int iteration = 0;
  std::string side;  // "init", "alice", "bob"
  double fidelity = 0.0;
  double p_succ = 0.0;
};

struct SeesawStep {
  std::vector<ChoiBranch> branches;
  double fidelity = 0.0;
  double p_succ = 0.0;
  bool relaxed = false;  // success constraint solved as >= delta
  std::string status;    // solver status of the step
  bool ok() const { return status == "optimal" || status == "near-optimal"; }
};

struct SeesawState {
  std::vector<ChoiBranch> alice, bob;
  FlagRule rule = FlagRule::Local;
  double delta = 0.0;
  std::vector<SeesawPoint> trajectory;
  std::string status = "ok";  // ok, or the failing step's status
  double fidelity() const { return trajectory.empty() ? 0.0 : trajectory.back().fidelity; }
  double p_succ() const { return trajectory.empty() ? 0.0 : trajectory.back().p_succ; }
};

struct SeesawOptions {
  int max_iters = 50;
  double tol = 1e-7;
  bool bob_first = true;
  double delta = 0.0;  // <= 0: use the initial protocol's success probability
  double sdp_tol = 1e-8;
  int D = 2;
};

// Optimize `side` with the other party's branches fixed (Program 2 for local flags, Program 3 for nonlocal).
SeesawStep seesaw_step(const Operator& rho, const std::vector<ChoiBranch>& fixed, Side side, FlagRule rule,
                       double delta, int D = 2, double sdp_tol = 1e-8);

SeesawState seesaw_run(const Operator& rho, const ChoiProtocol& init, const SeesawOptions& opt = {});
SeesawState seesaw_run(const Operator& rho, const KrausProtocol& init, const SeesawOptions& opt = {});

// Random flagged Kraus protocol on the parties of `rho` (real isometries), for randomized starts.
KrausProtocol random_protocol(const Operator& rho, FlagRule rule, std::uint64_t seed, int D = 2);

}  // namespace distil
