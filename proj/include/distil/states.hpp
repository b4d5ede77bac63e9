#pragma once

#include <string>
#include <vector>

#include "distil/qmath.hpp"

namespace distil {

struct StateSpec {
  std::string family;  // isotropic, bell_diag, r_state, rotated_r, s_state, epl, custom
  std::vector<double> params;
  int sign = +1;       // r_state only
  std::string path;    // custom only
  int copies = 1;
};

// `family:param,param[;copies=n]`, e.g. `bell3:0.7,0.2,0.1;copies=2`.
StateSpec parse_state_spec(const std::string& text);
std::string to_string(const StateSpec& spec);

Operator make_state(const StateSpec& spec);

// Single-copy states use layout (A1: Alice, B1: Bob).
Operator isotropic(double p, int D = 2);
Operator bell_diag(double p1, double p2, double p3);
Operator r_state(double p, int sign = +1);
Operator rotated_r(double p);
Operator s_state(double p);
// Two copies, layout (A1, A2, B1, B2).
Operator epl_integrated(double p, double pd);

// n copies of a single-copy state, relabeled and ordered A1..An B1..Bn.
Operator tensor_copies(const Operator& single, int n);
// Label copies of an operator on (A1, B1) as copy k.
Operator relabel_copy(const Operator& single, int k);

}  // namespace distil
