#pragma once

#include <complex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace distil {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kPsdFloor = -1e-9;

enum class Party { Alice, Bob, Flag };

std::string party_name(Party p);
Party party_from_name(const std::string& s);

struct Subsystem {
  std::string label;
  Party party;
  int dim;
};

class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<Subsystem> entries);

  const std::vector<Subsystem>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  int total_dim() const;
  int index_of(const std::string& label) const;  // -1 if absent
  bool has(const std::string& label) const { return index_of(label) >= 0; }
  int dim_of(const std::string& label) const;
  bool has_party(Party p) const;
  std::vector<std::string> labels() const;
  std::vector<std::string> labels_of(Party p) const;
  int party_dim(Party p) const;

  Layout concat(const Layout& other) const;
  Layout subset(const std::set<std::string>& keep) const;  // keeps original order
  Layout relabeled(const std::string& suffix) const;

  bool operator==(const Layout& o) const;

 private:
  std::vector<Subsystem> entries_;
};

// Hermitian matrix tagged with a subsystem layout.
class Operator {
 public:
  Operator() = default;
  Operator(Layout layout, CMat m);

  const Layout& layout() const { return layout_; }
  const CMat& mat() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  double trace() const { return m_.trace().real(); }
  bool is_real(double tol = 1e-14) const;

  Operator operator+(const Operator& o) const;
  Operator operator-(const Operator& o) const;
  Operator operator*(double s) const;

 private:
  Layout layout_;
  CMat m_;
};

// Density matrices are Operators whose constructor checks PSD and unit trace.
Operator make_density(Layout layout, CMat m);
bool is_density(const Operator& op, double tol = 1e-9);

CMat hermitize(const CMat& m, double tol = kHermTol);
double min_eigenvalue(const CMat& m);
RVec eigenvalues(const CMat& m);
CMat psd_clip(const CMat& m, double floor = 0.0);

Operator kron(const Operator& a, const Operator& b);
Operator partial_trace(const Operator& m, const std::set<std::string>& keep);
Operator partial_transpose(const Operator& m);
Operator partial_transpose(const Operator& m, const std::set<std::string>& labels);
Operator permute_subsystems(const Operator& m, const std::vector<std::string>& order);

// Index helpers exposed for the SDP linear maps.
std::vector<int> permutation_indices(const Layout& from, const std::vector<std::string>& order);
CMat partial_trace_matrix(const CMat& m, const Layout& layout, const std::set<std::string>& keep);
CMat partial_transpose_matrix(const CMat& m, const Layout& layout, const std::set<std::string>& labels);
// For every basis index: (index restricted to `labels`, index restricted to the rest).
std::pair<std::vector<int>, std::vector<int>> split_indices(const Layout& layout,
                                                            const std::set<std::string>& labels);

CMat max_entangled_vec(int d);  // column vector (1/sqrt d) sum |ii>
CMat max_entangled(int d);      // projector Phi_d
Operator max_entangled(int d, const std::string& a, const std::string& b);

double fidelity_to_target(const Operator& rho, int D);

// U x U* twirl on the pair (a_label, b_label); identity elsewhere.
Operator twirl(const Operator& rho, int D, const std::string& a_label, const std::string& b_label);
Operator twirl(const Operator& rho, int D);

Operator pauli_twirl(const Operator& rho);

struct ChoiBranch {
  int flag = 0;
  Operator matrix;            // layout = output subsystems followed by input subsystems
  std::vector<std::string> inputs;
};

struct KrausOp {
  int flag;
  CMat k;
};

std::vector<ChoiBranch> choi_of_kraus(const std::vector<KrausOp>& kraus, const Layout& out,
                                      const Layout& in);
std::vector<ChoiBranch> choi_of_kraus(const std::vector<KrausOp>& kraus, int in_dim);
Operator choi_input_marginal(const ChoiBranch& b);
bool check_choi_branches(const std::vector<ChoiBranch>& bs, double tol = 1e-8);
Operator apply_via_choi(const ChoiBranch& branch, const Operator& rho);
CMat apply_kraus(const std::vector<CMat>& ks, const CMat& rho);

std::pair<Operator, Operator> sym_antisym_projectors(int d);
bool is_ppt(const Operator& m, double tol = 1e-9);

nlohmann::json to_json(const Operator& op);
Operator operator_from_json(const nlohmann::json& j);
nlohmann::json layout_to_json(const Layout& l);
Layout layout_from_json(const nlohmann::json& j);

// Pauli matrices and Bell vectors (|Phi+>, |Psi+>, |Phi->, |Psi->) on two qubits.
CMat pauli(int i);
CMat bell_vec(int k);
CMat bell_proj(int k);

}  // namespace distil
