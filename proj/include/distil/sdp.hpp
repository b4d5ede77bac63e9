#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "distil/qmath.hpp"

namespace distil::sdp {

using SpMat = Eigen::SparseMatrix<double>;

struct Trip {
  int r, c;
  double v;
};
using Trips = std::vector<Trip>;
void coalesce(Trips& t, double drop = 1e-15);

// One elementary linear map on square matrices.
class MapStep {
 public:
  enum class Kind { PartialTranspose, PartialTrace, Congruence };

  static MapStep partial_transpose(const Layout& in, const std::set<std::string>& labels);
  static MapStep partial_trace(const Layout& in, const std::set<std::string>& keep);
  // X -> V X V^T with real V (out x in)
  static MapStep congruence(const SpMat& v, const Layout& in, const Layout& out);

  Kind kind() const { return kind_; }
  const Layout& in_layout() const { return in_; }
  const Layout& out_layout() const { return out_; }
  const std::set<std::string>& labels() const { return labels_; }
  const SpMat& v() const { return v_; }
  int in_dim() const { return in_.total_dim(); }
  int out_dim() const { return out_.total_dim(); }

  CMat apply(const CMat& x) const;
  CMat adjoint(const CMat& y) const;
  Trips apply(const Trips& t) const;
  Trips adjoint(const Trips& t) const;
  std::string tag() const;

 private:
  Kind kind_ = Kind::PartialTranspose;
  Layout in_, out_;
  std::set<std::string> labels_;
  SpMat v_, vt_;
  std::vector<int> part_;    // PT: index contribution of transposed labels
  std::vector<int> kept_, traced_, full_;  // partial trace tables
  int dt_ = 1;
};

class LinearMap {
 public:
  LinearMap() = default;
  explicit LinearMap(Layout in) : in_(std::move(in)), cur_(in_) {}
  static LinearMap identity(int dim);

  LinearMap& pt();  // transpose all Bob subsystems of the current layout
  LinearMap& pt(const std::set<std::string>& labels);
  LinearMap& keep(const std::set<std::string>& labels);
  LinearMap& congruence(const SpMat& v, const Layout& out);

  const Layout& in_layout() const { return in_; }
  const Layout& out_layout() const { return cur_; }
  int in_dim() const { return in_.total_dim(); }
  int out_dim() const { return cur_.total_dim(); }
  const std::vector<MapStep>& steps() const { return steps_; }
  bool is_identity() const { return steps_.empty(); }

  CMat apply(const CMat& x) const;
  CMat adjoint(const CMat& y) const;
  Trips apply(Trips t) const;
  Trips adjoint(Trips t) const;
  std::string tag() const;

  // Lift to the real embedding: a leading 2-dim subsystem carries Re/Im.
  LinearMap embedded() const;

 private:
  Layout in_, cur_;
  std::vector<MapStep> steps_;
};

enum class Cone { Psd, Free };
enum class Sense { Eq, Le, Ge };

struct Block {
  std::string name;
  int dim = 1;
  Cone cone = Cone::Psd;
};

// tr(coeff * X); a free scalar uses a 1x1 coeff.
struct ScalarTerm {
  std::string block;
  CMat coeff;
};

// weight * map(X)
struct MatrixTerm {
  std::string block;
  double weight = 1.0;
  LinearMap map;
};

struct Constraint {
  std::string name;
  Sense sense = Sense::Eq;
  bool matrix = false;
  std::vector<ScalarTerm> sterms;
  double srhs = 0.0;
  std::vector<MatrixTerm> mterms;
  CMat mrhs;
  int out_dim() const { return matrix ? static_cast<int>(mrhs.rows()) : 1; }
};

// Maximization problem over named PSD / free-scalar blocks.
class SdpProblem {
 public:
  void add_block(const std::string& name, int dim, Cone cone = Cone::Psd);
  void add_objective(const std::string& block, const CMat& coeff);
  int add_scalar_constraint(const std::string& name, std::vector<ScalarTerm> terms, Sense s, double rhs);
  int add_matrix_constraint(const std::string& name, std::vector<MatrixTerm> terms, Sense s, const CMat& rhs);

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<ScalarTerm>& objective() const { return objective_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Block& block(const std::string& name) const;
  int block_index(const std::string& name) const;

  void validate() const;
  bool is_real(double tol = 1e-14) const;
  nlohmann::json to_json() const;

  // evaluation at given block values
  double objective_value(const std::map<std::string, CMat>& x) const;
  CMat constraint_lhs(const Constraint& c, const std::map<std::string, CMat>& x) const;
  // max violation over all constraints (eigenvalue based for inequalities)
  double max_violation(const std::map<std::string, CMat>& x) const;

 private:
  friend SdpProblem embed_complex(const SdpProblem& p);
  std::vector<Block> blocks_;
  std::vector<ScalarTerm> objective_;
  std::vector<Constraint> constraints_;
};

SdpProblem embed_complex(const SdpProblem& p);
CMat embed_matrix(const CMat& m);
CMat extract_matrix(const CMat& m);  // inverse of embed_matrix on its range (averaging)

enum class SolveStatus { Optimal, NearOptimal, Infeasible, Unbounded, SolverFailure };
std::string to_string(SolveStatus s);

struct SdpSolution {
  SolveStatus status = SolveStatus::SolverFailure;
  double primal_objective = 0.0;  // maximization value
  double dual_objective = 0.0;
  std::map<std::string, CMat> block_values;
  // Dual matrices per constraint (1x1 for scalar rows), Lagrangian sign convention:
  // sum_k s_k L_k^dag(Y_k) - C >= 0 with s = +1 for <= and =, -1 for >=.
  std::vector<CMat> constraint_duals;
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double rel_gap = 0.0;
  std::string form;  // "slack" or "entry"
  int schur_size = 0;
  double seconds = 0.0;
  bool ok() const { return status == SolveStatus::Optimal || status == SolveStatus::NearOptimal; }
};

enum class Form { Auto, Slack, Entry };

struct SolveOptions {
  int max_iters = 120;
  Form form = Form::Auto;
  bool verbose = false;
};

SdpSolution solve(const SdpProblem& p, double tol = 1e-8, const SolveOptions& opt = {});

// ---- standard form consumed by the interior-point core ----
//   min <C,X> + f'u   s.t.  A(X) + B u = b,  X psd (block diagonal), u free
//   max b'y           s.t.  A'(y) + Z = C,  B'y = f,  Z psd
struct SfEntry {
  int blk;
  int r, c;  // r <= c; matrix v (e_r e_c' + e_c e_r') for r < c, v e_r e_r' on the diagonal
  double v;
};

struct StandardForm {
  std::vector<int> dims;
  std::vector<RMat> C;
  std::vector<std::vector<SfEntry>> rows;
  RVec b;
  RMat B;  // rows x nfree
  RVec f;
  int m() const { return static_cast<int>(b.size()); }
};

struct IpmResult {
  SolveStatus status = SolveStatus::SolverFailure;
  std::vector<RMat> X, Z;
  RVec y, u;
  double pobj = 0, dobj = 0;
  int iterations = 0;
  double pinf = 0, dinf = 0, gap = 0;
};

IpmResult ipm_solve(const StandardForm& sf, double tol, const SolveOptions& opt);

}  // namespace distil::sdp
