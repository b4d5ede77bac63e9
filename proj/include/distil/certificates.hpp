#pragma once

#include <array>
#include <map>
#include <string>

#include "distil/bounds.hpp"
#include "distil/qmath.hpp"

namespace distil {

// Bell-diagonal weights (Phi+, Psi+, Phi-, Psi-) and tetrahedron coordinates r_i = tr[P_i P_i tau].
struct BellParams {
  double p1 = 0, p2 = 0, p3 = 0;
  double r1 = 0, r2 = 0, r3 = 0;
  double p4() const { return 1.0 - p1 - p2 - p3; }
};

BellParams bell_params(double p1, double p2, double p3);
BellParams bell_params_from_r(double r1, double r2, double r3);

// V = sum_k w_k (Bell-product projector pairs), on two copies in layout (A1, A2, B1, B2).
struct BellDualV {
  std::array<double, 10> w{};
};

Operator bell_dual_matrix(const BellDualV& v);
// Pauli-string coordinates v_P = tr[P V] for P in {IIII, IIXX, IIYY, IIZZ, XXXX, XXYY, XXZZ, YYYY, YYZZ}
// (ordering A1 B1 A2 B2), keyed "v0", "v1", "v2", "v3", "v11", "v12", "v13", "v22", "v23".
std::map<std::string, double> v_coords(const Operator& v);
// Closed forms of v2, v12, v23 in terms of the w coefficients.
std::array<double, 3> pt_invariance_terms(const BellDualV& v);

// Two copies of p1 Phi+ + p2 Psi+ + (1-p1-p2) Phi-.
Operator rank3_pair(double p1, double p2);

DualCertificate dejmps_fidelity_certificate(double p1, double p2, double delta);
DualCertificate dejmps_success_certificate(double p1, double p2);
// DEJMPS output fidelity p1^2/N and success probability N = p1^2 + (1-p1)^2.
double dejmps_rank3_fidelity(double p1);
double dejmps_rank3_success(double p1);

struct EplBlocks {
  double weight_l = 0, weight_i = 0, weight_f = 0;
  Operator rho_l, rho_i, rho_f;  // normalized, layout (A1, A2, B1, B2)
  Operator rho_f_relabeled;      // two-qubit state on (A1, B1)
};

EplBlocks epl_block_decomposition(double p, double pd);

double binary_entropy(double x);
// Base-2 relative entropy; +infinity when supp(rho) is not inside supp(sigma).
double relative_entropy(const Operator& rho, const Operator& sigma);
Operator sep_guess_state(double p);

}  // namespace distil
