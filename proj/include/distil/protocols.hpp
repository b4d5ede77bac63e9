#pragma once

#include <array>
#include <string>
#include <vector>

#include "distil/qmath.hpp"

namespace distil {

struct ProtocolOutcome {
  double p_succ = 0.0;
  Operator output;  // conditional state on (Ahat, Bhat)
  double fidelity = 0.0;
};

enum class FlagRule { Local, Nonlocal };  // success iff fA=fB=1 / iff fA=fB
std::string to_string(FlagRule r);
bool flags_succeed(FlagRule r, int fa, int fb);

struct SideKraus {
  std::vector<KrausOp> ops;
  Layout out;  // output register
  Layout in;   // input registers (labels of the state)
};

struct KrausProtocol {
  SideKraus alice;
  SideKraus bob;
  FlagRule rule = FlagRule::Local;
};

struct ChoiProtocol {
  std::vector<ChoiBranch> alice;
  std::vector<ChoiBranch> bob;
  FlagRule rule = FlagRule::Local;
};

using BellVec = std::array<double, 4>;  // weights of Phi+, Psi+, Phi-, Psi-

Layout output_layout(int D = 2);
BellVec bell_coefficients(const Operator& two_qubit);
Operator bell_state(const BellVec& w, const Layout& layout);
// Marginal of copy k (labels Ak, Bk) of a multi-copy state.
Operator copy_marginal(const Operator& rho, int k);
// Bilateral CNOT on two Bell-diagonal copies, keep the source when parities agree.
std::pair<double, BellVec> bilateral_cnot_bell(const BellVec& a, const BellVec& b);
BellVec sort_bell(const BellVec& w);

ProtocolOutcome outcome_from_state(const CMat& unnormalized, int D = 2);

ProtocolOutcome filtering(const Operator& rho, double eps);
// eps at which filtering succeeds with probability p_succ (p_succ is increasing in eps).
double filtering_eps_for(const Operator& rho, double p_succ);
ProtocolOutcome bbpssw(const Operator& rho);
ProtocolOutcome dejmps(const Operator& rho);
ProtocolOutcome dejmps_bell(const BellVec& a, const BellVec& b);
ProtocolOutcome epl_d(const Operator& rho, bool correct = true);
ProtocolOutcome mix(double r, const ProtocolOutcome& a, const ProtocolOutcome& b);
ProtocolOutcome extrapolate_up(const ProtocolOutcome& base, double input_copy_fidelity, double r);
ProtocolOutcome extrapolate_up(const ProtocolOutcome& base, const Operator& input_copy, double r);
ProtocolOutcome epl_extrapolate(double p, double pd, double r);
double modified_filtering_optimal(double p, double p_succ);

// Three-copy compositions.
ProtocolOutcome dejmps_a(const Operator& single);
ProtocolOutcome dejmps_b(const Operator& single);

// Local circuits as flagged Kraus families.
KrausProtocol filtering_protocol(double eps);
KrausProtocol dejmps_protocol(int copies = 2);
KrausProtocol epl_d_protocol(bool correct = true);
KrausProtocol identity_protocol();

ChoiProtocol to_choi(const KrausProtocol& proto);

// Full matrix simulation of a flagged Kraus protocol on ρ (layout A.. B..).
ProtocolOutcome simulate(const Operator& rho, const KrausProtocol& proto);

struct ChoiEval {
  double p_succ = 0.0;
  double fidelity = 0.0;
};
// Achievable curves. Coin mixtures are linear in (p_succ, p_succ*F) and throttling scales a point toward
// the origin, so the best curve is the upper concave hull of the points together with (0, 0).
struct NamedOutcome {
  std::string name;
  double p_succ = 0.0;
  double fidelity = 0.0;
};
struct CurvePoint {
  double delta = 0.0;
  double fidelity = 0.0;
  std::string source;
};
// Grid values above the largest p_succ are not achievable and are dropped.
std::vector<CurvePoint> achievable_curve(const std::vector<NamedOutcome>& pts, const std::vector<double>& grid);
NamedOutcome named(const std::string& name, const ProtocolOutcome& o);
// Output one input copy unconditionally (p_succ = 1), after the best local Pauli on Alice's side.
ProtocolOutcome keep_copy(const Operator& copy, int D = 2);
// Run `base`, output a fidelity-1/2 separable state on failure (p_succ = 1).
ProtocolOutcome separable_on_failure(const ProtocolOutcome& base);

ChoiEval evaluate_choi(const Operator& rho, const std::vector<ChoiBranch>& alice,
                       const std::vector<ChoiBranch>& bob, FlagRule rule, int D = 2);

}  // namespace distil
