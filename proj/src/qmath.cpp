#include "distil/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <map>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace distil {

std::string party_name(Party p) {
  switch (p) {
    case Party::Alice: return "Alice";
    case Party::Bob: return "Bob";
    case Party::Flag: return "Flag";
  }
  return "?";
}

Party party_from_name(const std::string& s) {
  if (s == "Alice") return Party::Alice;
  if (s == "Bob") return Party::Bob;
  if (s == "Flag") return Party::Flag;
  throw std::invalid_argument("unknown party '" + s + "'");
}

Layout::Layout(std::vector<Subsystem> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.dim <= 0) throw std::invalid_argument("subsystem '" + e.label + "' has non-positive dim");
    if (!seen.insert(e.label).second) throw std::invalid_argument("duplicate subsystem label '" + e.label + "'");
  }
}

int Layout::total_dim() const {
  int d = 1;
  for (const auto& e : entries_) d *= e.dim;
  return d;
}

int Layout::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].label == label) return static_cast<int>(i);
  return -1;
}

int Layout::dim_of(const std::string& label) const {
  int i = index_of(label);
  if (i < 0) throw std::invalid_argument("unknown subsystem label '" + label + "'");
  return entries_[i].dim;
}

bool Layout::has_party(Party p) const {
  return std::any_of(entries_.begin(), entries_.end(), [p](const Subsystem& s) { return s.party == p; });
}

std::vector<std::string> Layout::labels() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.label);
  return out;
}

std::vector<std::string> Layout::labels_of(Party p) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.party == p) out.push_back(e.label);
  return out;
}

int Layout::party_dim(Party p) const {
  int d = 1;
  for (const auto& e : entries_)
    if (e.party == p) d *= e.dim;
  return d;
}

Layout Layout::concat(const Layout& other) const {
  auto e = entries_;
  e.insert(e.end(), other.entries_.begin(), other.entries_.end());
  return Layout(std::move(e));
}

Layout Layout::subset(const std::set<std::string>& keep) const {
  std::vector<Subsystem> e;
  for (const auto& s : entries_)
    if (keep.count(s.label)) e.push_back(s);
  return Layout(std::move(e));
}

Layout Layout::relabeled(const std::string& suffix) const {
  auto e = entries_;
  for (auto& s : e) s.label += suffix;
  return Layout(std::move(e));
}

bool Layout::operator==(const Layout& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = o.entries_[i];
    if (a.label != b.label || a.party != b.party || a.dim != b.dim) return false;
  }
  return true;
}

CMat hermitize(const CMat& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("operator matrix is not square");
  double drift = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (!(drift <= tol)) throw std::invalid_argument("operator is not Hermitian (drift " + std::to_string(drift) + ")");
  return (m + m.adjoint()) * 0.5;
}

Operator::Operator(Layout layout, CMat m) : layout_(std::move(layout)) {
  if (m.rows() != layout_.total_dim())
    throw std::invalid_argument("matrix size " + std::to_string(m.rows()) + " does not match layout dim " +
                                std::to_string(layout_.total_dim()));
  m_ = hermitize(m);
}

bool Operator::is_real(double tol) const { return m_.imag().cwiseAbs().maxCoeff() <= tol; }

Operator Operator::operator+(const Operator& o) const {
  if (!(layout_ == o.layout_)) throw std::invalid_argument("layout mismatch in operator sum");
  return Operator(layout_, m_ + o.m_);
}

Operator Operator::operator-(const Operator& o) const {
  if (!(layout_ == o.layout_)) throw std::invalid_argument("layout mismatch in operator difference");
  return Operator(layout_, m_ - o.m_);
}

Operator Operator::operator*(double s) const { return Operator(layout_, m_ * s); }

RVec eigenvalues(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const CMat& m) {
  if (m.size() == 0) return 0.0;
  return eigenvalues(m).minCoeff();
}

CMat psd_clip(const CMat& m, double floor) {
  Eigen::SelfAdjointEigenSolver<CMat> es((m + m.adjoint()) * 0.5);
  RVec ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

bool is_density(const Operator& op, double tol) {
  if (std::abs(op.trace() - 1.0) > std::max(tol, 1e-10) * 10) return false;
  return min_eigenvalue(op.mat()) >= -tol;
}

Operator make_density(Layout layout, CMat m) {
  Operator op(std::move(layout), std::move(m));
  if (std::abs(op.trace() - 1.0) > 1e-10)
    throw std::invalid_argument("density matrix trace " + std::to_string(op.trace()) + " != 1");
  double me = min_eigenvalue(op.mat());
  if (me < kPsdFloor) throw std::invalid_argument("density matrix has eigenvalue " + std::to_string(me));
  return op;
}

Operator kron(const Operator& a, const Operator& b) {
  Layout l = a.layout().concat(b.layout());
  const CMat& A = a.mat();
  const CMat& B = b.mat();
  CMat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return Operator(std::move(l), std::move(out));
}

std::pair<std::vector<int>, std::vector<int>> split_indices(const Layout& layout,
                                                            const std::set<std::string>& labels) {
  for (const auto& l : labels)
    if (!layout.has(l)) throw std::invalid_argument("unknown subsystem label '" + l + "'");
  const int n = layout.total_dim();
  std::vector<int> in(n), out(n);
  const auto& es = layout.entries();
  std::vector<int> digit(es.size(), 0);
  for (int idx = 0; idx < n; ++idx) {
    int a = 0, b = 0;
    for (std::size_t k = 0; k < es.size(); ++k) {
      if (labels.count(es[k].label))
        a = a * es[k].dim + digit[k];
      else
        b = b * es[k].dim + digit[k];
    }
    in[idx] = a;
    out[idx] = b;
    for (int k = static_cast<int>(es.size()) - 1; k >= 0; --k) {
      if (++digit[k] < es[k].dim) break;
      digit[k] = 0;
    }
  }
  return {in, out};
}

CMat partial_trace_matrix(const CMat& m, const Layout& layout, const std::set<std::string>& keep) {
  auto [kept, traced] = split_indices(layout, keep);
  const int n = layout.total_dim();
  int dk = 1;
  for (const auto& e : layout.entries())
    if (keep.count(e.label)) dk *= e.dim;
  CMat out = CMat::Zero(dk, dk);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r)
      if (traced[r] == traced[c]) out(kept[r], kept[c]) += m(r, c);
  return out;
}

Operator partial_trace(const Operator& m, const std::set<std::string>& keep) {
  Layout l = m.layout().subset(keep);
  return Operator(l, partial_trace_matrix(m.mat(), m.layout(), keep));
}

CMat partial_transpose_matrix(const CMat& m, const Layout& layout, const std::set<std::string>& labels) {
  // index = sum of per-subsystem contributions, so transposing a group swaps its contribution
  const auto& es = layout.entries();
  const int n = layout.total_dim();
  std::vector<int> part(n, 0);
  std::vector<int> digit(es.size(), 0);
  std::vector<int> stride(es.size(), 1);
  for (int k = static_cast<int>(es.size()) - 2; k >= 0; --k) stride[k] = stride[k + 1] * es[k + 1].dim;
  for (int idx = 0; idx < n; ++idx) {
    int p = 0;
    for (std::size_t k = 0; k < es.size(); ++k)
      if (labels.count(es[k].label)) p += digit[k] * stride[k];
    part[idx] = p;
    for (int k = static_cast<int>(es.size()) - 1; k >= 0; --k) {
      if (++digit[k] < es[k].dim) break;
      digit[k] = 0;
    }
  }
  CMat out(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) out(r - part[r] + part[c], c - part[c] + part[r]) = m(r, c);
  return out;
}

Operator partial_transpose(const Operator& m, const std::set<std::string>& labels) {
  for (const auto& l : labels)
    if (!m.layout().has(l)) throw std::invalid_argument("unknown subsystem label '" + l + "'");
  return Operator(m.layout(), partial_transpose_matrix(m.mat(), m.layout(), labels));
}

Operator partial_transpose(const Operator& m) {
  auto bob = m.layout().labels_of(Party::Bob);
  if (bob.empty()) throw std::invalid_argument("partial transpose needs a Bob subsystem");
  return partial_transpose(m, std::set<std::string>(bob.begin(), bob.end()));
}

std::vector<int> permutation_indices(const Layout& from, const std::vector<std::string>& order) {
  if (order.size() != from.size()) throw std::invalid_argument("order is not a permutation of the layout");
  std::vector<int> pos;
  std::set<std::string> seen;
  for (const auto& l : order) {
    int i = from.index_of(l);
    if (i < 0 || !seen.insert(l).second) throw std::invalid_argument("order is not a permutation of the layout");
    pos.push_back(i);
  }
  const auto& es = from.entries();
  std::vector<int> stride(es.size(), 1);
  for (int k = static_cast<int>(es.size()) - 2; k >= 0; --k) stride[k] = stride[k + 1] * es[k + 1].dim;
  const int n = from.total_dim();
  std::vector<int> result(n);
  std::vector<int> digit(order.size(), 0);
  for (int idx = 0; idx < n; ++idx) {
    int old = 0;
    for (std::size_t k = 0; k < order.size(); ++k) old += digit[k] * stride[pos[k]];
    result[idx] = old;
    for (int k = static_cast<int>(order.size()) - 1; k >= 0; --k) {
      if (++digit[k] < es[pos[k]].dim) break;
      digit[k] = 0;
    }
  }
  return result;
}

Operator permute_subsystems(const Operator& m, const std::vector<std::string>& order) {
  auto perm = permutation_indices(m.layout(), order);
  std::vector<Subsystem> es;
  for (const auto& l : order) es.push_back(m.layout().entries()[m.layout().index_of(l)]);
  const int n = m.dim();
  CMat out(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) out(r, c) = m.mat()(perm[r], perm[c]);
  return Operator(Layout(std::move(es)), std::move(out));
}

CMat max_entangled_vec(int d) {
  CMat v = CMat::Zero(d * d, 1);
  for (int i = 0; i < d; ++i) v(i * d + i, 0) = 1.0 / std::sqrt(static_cast<double>(d));
  return v;
}

CMat max_entangled(int d) {
  CMat v = max_entangled_vec(d);
  return v * v.adjoint();
}

Operator max_entangled(int d, const std::string& a, const std::string& b) {
  return Operator(Layout({{a, Party::Alice, d}, {b, Party::Bob, d}}), max_entangled(d));
}

double fidelity_to_target(const Operator& rho, int D) {
  if (rho.dim() != D * D) throw std::invalid_argument("fidelity_to_target: state is not on D x D");
  CMat v = max_entangled_vec(D);
  return (v.adjoint() * rho.mat() * v)(0, 0).real();
}

Operator twirl(const Operator& rho, int D, const std::string& a_label, const std::string& b_label) {
  const Layout& l = rho.layout();
  if (l.dim_of(a_label) != D || l.dim_of(b_label) != D) throw std::invalid_argument("twirl: subsystems are not D-dimensional");
  std::vector<std::string> order{a_label, b_label};
  for (const auto& s : l.labels())
    if (s != a_label && s != b_label) order.push_back(s);
  Operator p = permute_subsystems(rho, order);
  const int rest = p.dim() / (D * D);
  CMat phi = max_entangled(D);
  CMat comp = CMat::Identity(D * D, D * D) - phi;
  CMat m1 = CMat::Zero(rest, rest), m2 = CMat::Zero(rest, rest);
  for (int i = 0; i < D * D; ++i)
    for (int j = 0; j < D * D; ++j) {
      auto blk = p.mat().block(i * rest, j * rest, rest, rest);
      m1 += phi(j, i) * blk;
      m2 += comp(j, i) * blk;
    }
  CMat out = CMat::Zero(p.dim(), p.dim());
  for (int i = 0; i < D * D; ++i)
    for (int j = 0; j < D * D; ++j)
      out.block(i * rest, j * rest, rest, rest) = phi(i, j) * m1 + comp(i, j) / double(D * D - 1) * m2;
  Operator tw(p.layout(), out);
  return permute_subsystems(tw, l.labels());
}

Operator twirl(const Operator& rho, int D) {
  auto a = rho.layout().labels_of(Party::Alice);
  auto b = rho.layout().labels_of(Party::Bob);
  if (a.empty() || b.empty()) throw std::invalid_argument("twirl needs Alice and Bob subsystems");
  return twirl(rho, D, a.front(), b.front());
}

CMat pauli(int i) {
  CMat m(2, 2);
  switch (i) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli index");
  }
  return m;
}

CMat bell_vec(int k) {
  const double s = 1.0 / std::sqrt(2.0);
  CMat v = CMat::Zero(4, 1);
  switch (k) {
    case 0: v(0) = s; v(3) = s; break;   // Phi+
    case 1: v(1) = s; v(2) = s; break;   // Psi+
    case 2: v(0) = s; v(3) = -s; break;  // Phi-
    case 3: v(1) = s; v(2) = -s; break;  // Psi-
    default: throw std::invalid_argument("bell index");
  }
  return v;
}

CMat bell_proj(int k) {
  CMat v = bell_vec(k);
  return v * v.adjoint();
}

Operator pauli_twirl(const Operator& rho) {
  if (rho.dim() != 4 || rho.layout().party_dim(Party::Alice) != 2 || rho.layout().party_dim(Party::Bob) != 2)
    throw std::invalid_argument("pauli_twirl needs a two-qubit bipartite state");
  CMat out = CMat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    CMat u = Eigen::kroneckerProduct(pauli(i), pauli(i)).eval();
    out += u * rho.mat() * u.adjoint();
  }
  return Operator(rho.layout(), out / 4.0);
}

std::vector<ChoiBranch> choi_of_kraus(const std::vector<KrausOp>& kraus, const Layout& out, const Layout& in) {
  const int din = in.total_dim();
  const int dout = out.total_dim();
  CMat tp = CMat::Zero(din, din);
  for (const auto& k : kraus) {
    if (k.k.rows() != dout || k.k.cols() != din) throw std::invalid_argument("Kraus operator has wrong shape");
    tp += k.k.adjoint() * k.k;
  }
  if ((tp - CMat::Identity(din, din)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("Kraus family is not trace preserving");
  Layout l = out.concat(in);
  CMat phi = max_entangled_vec(din);
  std::map<int, CMat> acc;
  for (const auto& k : kraus) {
    CMat kk = Eigen::kroneckerProduct(k.k, CMat::Identity(din, din)).eval();
    CMat v = kk * phi;
    auto it = acc.find(k.flag);
    if (it == acc.end())
      acc.emplace(k.flag, v * v.adjoint());
    else
      it->second += v * v.adjoint();
  }
  std::vector<ChoiBranch> res;
  for (auto& [f, m] : acc) res.push_back({f, Operator(l, m), in.labels()});
  return res;
}

std::vector<ChoiBranch> choi_of_kraus(const std::vector<KrausOp>& kraus, int in_dim) {
  if (kraus.empty()) throw std::invalid_argument("empty Kraus family");
  int out_dim = static_cast<int>(kraus.front().k.rows());
  return choi_of_kraus(kraus, Layout({{"out", Party::Alice, out_dim}}), Layout({{"in", Party::Alice, in_dim}}));
}

Operator choi_input_marginal(const ChoiBranch& b) {
  return partial_trace(b.matrix, std::set<std::string>(b.inputs.begin(), b.inputs.end()));
}

bool check_choi_branches(const std::vector<ChoiBranch>& bs, double tol) {
  if (bs.empty()) return false;
  CMat sum;
  for (const auto& b : bs) {
    if (min_eigenvalue(b.matrix.mat()) < -tol) return false;
    CMat m = choi_input_marginal(b).mat();
    if (sum.size() == 0)
      sum = m;
    else
      sum += m;
  }
  const int d = static_cast<int>(sum.rows());
  return (sum - CMat::Identity(d, d) / double(d)).cwiseAbs().maxCoeff() <= tol;
}

Operator apply_via_choi(const ChoiBranch& branch, const Operator& rho) {
  const Layout& l = branch.matrix.layout();
  std::set<std::string> ins(branch.inputs.begin(), branch.inputs.end());
  std::vector<std::string> outs;
  for (const auto& s : l.labels())
    if (!ins.count(s)) outs.push_back(s);
  std::vector<std::string> order = outs;
  order.insert(order.end(), branch.inputs.begin(), branch.inputs.end());
  Operator c = permute_subsystems(branch.matrix, order);
  // match input ordering of the branch
  std::vector<Subsystem> ie;
  for (const auto& s : branch.inputs) ie.push_back(l.entries()[l.index_of(s)]);
  const int din = Layout(ie).total_dim();
  if (rho.dim() != din) throw std::invalid_argument("apply_via_choi: state dim does not match Choi input");
  const int dout = c.dim() / din;
  CMat out = CMat::Zero(dout, dout);
  for (int o = 0; o < dout; ++o)
    for (int p = 0; p < dout; ++p) {
      cplx s = 0;
      for (int i = 0; i < din; ++i)
        for (int j = 0; j < din; ++j) s += c.mat()(o * din + i, p * din + j) * rho.mat()(i, j);
      out(o, p) = s * double(din);
    }
  std::set<std::string> outset(outs.begin(), outs.end());
  return Operator(c.layout().subset(outset), out);
}

CMat apply_kraus(const std::vector<CMat>& ks, const CMat& rho) {
  CMat out = CMat::Zero(ks.front().rows(), ks.front().rows());
  for (const auto& k : ks) out += k * rho * k.adjoint();
  return out;
}

std::pair<Operator, Operator> sym_antisym_projectors(int d) {
  const int n = d * d;
  CMat swap = CMat::Zero(n, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) swap(j * d + i, i * d + j) = 1.0;
  CMat id = CMat::Identity(n, n);
  Layout l({{"S1", Party::Alice, d}, {"S2", Party::Bob, d}});
  return {Operator(l, (id + swap) / 2.0), Operator(l, (id - swap) / 2.0)};
}

bool is_ppt(const Operator& m, double tol) { return min_eigenvalue(partial_transpose(m).mat()) >= -tol; }

nlohmann::json layout_to_json(const Layout& l) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : l.entries()) arr.push_back({{"label", e.label}, {"party", party_name(e.party)}, {"dim", e.dim}});
  return arr;
}

Layout layout_from_json(const nlohmann::json& j) {
  std::vector<Subsystem> es;
  for (const auto& e : j) es.push_back({e.at("label").get<std::string>(), party_from_name(e.at("party")), e.at("dim").get<int>()});
  return Layout(std::move(es));
}

nlohmann::json to_json(const Operator& op) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int r = 0; r < op.dim(); ++r) {
    nlohmann::json rr = nlohmann::json::array(), ri = nlohmann::json::array();
    for (int c = 0; c < op.dim(); ++c) {
      rr.push_back(op.mat()(r, c).real());
      ri.push_back(op.mat()(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return {{"layout", layout_to_json(op.layout())}, {"re", re}, {"im", im}};
}

Operator operator_from_json(const nlohmann::json& j) {
  Layout l = layout_from_json(j.at("layout"));
  const auto& re = j.at("re");
  const int n = l.total_dim();
  if (static_cast<int>(re.size()) != n) throw std::invalid_argument("operator JSON: row count mismatch");
  CMat m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double im = j.contains("im") ? j["im"][r][c].get<double>() : 0.0;
      m(r, c) = cplx(re[r][c].get<double>(), im);
    }
  return Operator(std::move(l), std::move(m));
}

}  // namespace distil
