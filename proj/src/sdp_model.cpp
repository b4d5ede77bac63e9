#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "distil/sdp.hpp"

namespace distil::sdp {

namespace {

const char* kEmbedLabel = "__reim";

Layout prefixed(const Layout& l) {
  std::vector<Subsystem> es{{kEmbedLabel, Party::Flag, 2}};
  es.insert(es.end(), l.entries().begin(), l.entries().end());
  return Layout(es);
}

// real sparse times complex dense
CMat sp_mul(const SpMat& a, const CMat& x) {
  RMat re = a * x.real();
  RMat im = a * x.imag();
  CMat out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

}  // namespace

void coalesce(Trips& t, double drop) {
  std::sort(t.begin(), t.end(), [](const Trip& a, const Trip& b) { return a.c != b.c ? a.c < b.c : a.r < b.r; });
  Trips out;
  out.reserve(t.size());
  for (const auto& e : t) {
    if (!out.empty() && out.back().r == e.r && out.back().c == e.c)
      out.back().v += e.v;
    else
      out.push_back(e);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [drop](const Trip& e) { return std::abs(e.v) <= drop; }), out.end());
  t.swap(out);
}

MapStep MapStep::partial_transpose(const Layout& in, const std::set<std::string>& labels) {
  MapStep s;
  s.kind_ = Kind::PartialTranspose;
  s.in_ = in;
  s.out_ = in;
  s.labels_ = labels;
  for (const auto& l : labels)
    if (!in.has(l)) throw std::invalid_argument("partial transpose: unknown label '" + l + "'");
  const auto& es = in.entries();
  const int n = in.total_dim();
  std::vector<int> stride(es.size(), 1);
  for (int k = static_cast<int>(es.size()) - 2; k >= 0; --k) stride[k] = stride[k + 1] * es[k + 1].dim;
  s.part_.assign(n, 0);
  for (int idx = 0; idx < n; ++idx) {
    int p = 0;
    for (std::size_t k = 0; k < es.size(); ++k)
      if (labels.count(es[k].label)) p += ((idx / stride[k]) % es[k].dim) * stride[k];
    s.part_[idx] = p;
  }
  return s;
}

MapStep MapStep::partial_trace(const Layout& in, const std::set<std::string>& keep) {
  MapStep s;
  s.kind_ = Kind::PartialTrace;
  s.in_ = in;
  s.out_ = in.subset(keep);
  s.labels_ = keep;
  auto [k, t] = split_indices(in, keep);
  s.kept_ = k;
  s.traced_ = t;
  const int dk = s.out_.total_dim();
  s.dt_ = in.total_dim() / dk;
  s.full_.assign(in.total_dim(), 0);
  for (int idx = 0; idx < in.total_dim(); ++idx) s.full_[k[idx] * s.dt_ + t[idx]] = idx;
  return s;
}

MapStep MapStep::congruence(const SpMat& v, const Layout& in, const Layout& out) {
  if (v.cols() != in.total_dim() || v.rows() != out.total_dim())
    throw std::invalid_argument("congruence: matrix shape does not match layouts");
  MapStep s;
  s.kind_ = Kind::Congruence;
  s.in_ = in;
  s.out_ = out;
  s.v_ = v;
  s.v_.makeCompressed();
  s.vt_ = SpMat(v.transpose());
  s.vt_.makeCompressed();
  return s;
}

CMat MapStep::apply(const CMat& x) const {
  switch (kind_) {
    case Kind::PartialTranspose: return partial_transpose_matrix(x, in_, labels_);
    case Kind::PartialTrace: return partial_trace_matrix(x, in_, labels_);
    case Kind::Congruence: {
      CMat t = sp_mul(v_, x);
      return sp_mul(v_, CMat(t.transpose())).transpose();
    }
  }
  return x;
}

CMat MapStep::adjoint(const CMat& y) const {
  switch (kind_) {
    case Kind::PartialTranspose: return partial_transpose_matrix(y, in_, labels_);
    case Kind::PartialTrace: {
      const int n = in_.total_dim();
      CMat out = CMat::Zero(n, n);
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r)
          if (traced_[r] == traced_[c]) out(r, c) = y(kept_[r], kept_[c]);
      return out;
    }
    case Kind::Congruence: {
      CMat t = sp_mul(vt_, y);
      return sp_mul(vt_, CMat(t.transpose())).transpose();
    }
  }
  return y;
}

Trips MapStep::apply(const Trips& t) const {
  Trips out;
  switch (kind_) {
    case Kind::PartialTranspose:
      out.reserve(t.size());
      for (const auto& e : t) out.push_back({e.r - part_[e.r] + part_[e.c], e.c - part_[e.c] + part_[e.r], e.v});
      break;
    case Kind::PartialTrace:
      for (const auto& e : t)
        if (traced_[e.r] == traced_[e.c]) out.push_back({kept_[e.r], kept_[e.c], e.v});
      break;
    case Kind::Congruence:
      for (const auto& e : t)
        for (SpMat::InnerIterator ia(v_, e.r); ia; ++ia)
          for (SpMat::InnerIterator ib(v_, e.c); ib; ++ib)
            out.push_back({static_cast<int>(ia.row()), static_cast<int>(ib.row()), e.v * ia.value() * ib.value()});
      break;
  }
  coalesce(out);
  return out;
}

Trips MapStep::adjoint(const Trips& t) const {
  Trips out;
  switch (kind_) {
    case Kind::PartialTranspose:
      return apply(t);
    case Kind::PartialTrace:
      out.reserve(t.size() * dt_);
      for (const auto& e : t)
        for (int k = 0; k < dt_; ++k) out.push_back({full_[e.r * dt_ + k], full_[e.c * dt_ + k], e.v});
      break;
    case Kind::Congruence:
      for (const auto& e : t)
        for (SpMat::InnerIterator ia(vt_, e.r); ia; ++ia)
          for (SpMat::InnerIterator ib(vt_, e.c); ib; ++ib)
            out.push_back({static_cast<int>(ia.row()), static_cast<int>(ib.row()), e.v * ia.value() * ib.value()});
      break;
  }
  coalesce(out);
  return out;
}

std::string MapStep::tag() const {
  switch (kind_) {
    case Kind::PartialTranspose: return "partial-transpose";
    case Kind::PartialTrace: return "marginal";
    case Kind::Congruence: return "congruence";
  }
  return "?";
}

LinearMap LinearMap::identity(int dim) { return LinearMap(Layout({{"X", Party::Alice, dim}})); }

LinearMap& LinearMap::pt() {
  auto bob = cur_.labels_of(Party::Bob);
  if (bob.empty()) throw std::invalid_argument("partial transpose needs Bob subsystems");
  return pt(std::set<std::string>(bob.begin(), bob.end()));
}

LinearMap& LinearMap::pt(const std::set<std::string>& labels) {
  steps_.push_back(MapStep::partial_transpose(cur_, labels));
  return *this;
}

LinearMap& LinearMap::keep(const std::set<std::string>& labels) {
  steps_.push_back(MapStep::partial_trace(cur_, labels));
  cur_ = steps_.back().out_layout();
  return *this;
}

LinearMap& LinearMap::congruence(const SpMat& v, const Layout& out) {
  steps_.push_back(MapStep::congruence(v, cur_, out));
  cur_ = out;
  return *this;
}

CMat LinearMap::apply(const CMat& x) const {
  CMat y = x;
  for (const auto& s : steps_) y = s.apply(y);
  return y;
}

CMat LinearMap::adjoint(const CMat& y) const {
  CMat x = y;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) x = it->adjoint(x);
  return x;
}

Trips LinearMap::apply(Trips t) const {
  for (const auto& s : steps_) t = s.apply(t);
  return t;
}

Trips LinearMap::adjoint(Trips t) const {
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) t = it->adjoint(t);
  return t;
}

std::string LinearMap::tag() const {
  if (steps_.empty()) return "identity";
  std::string s;
  for (const auto& st : steps_) s += (s.empty() ? "" : "|") + st.tag();
  return s;
}

LinearMap LinearMap::embedded() const {
  LinearMap m(prefixed(in_));
  for (const auto& s : steps_) {
    switch (s.kind()) {
      case MapStep::Kind::PartialTranspose: m.pt(s.labels()); break;
      case MapStep::Kind::PartialTrace: {
        auto k = s.labels();
        k.insert(kEmbedLabel);
        m.keep(k);
        break;
      }
      case MapStep::Kind::Congruence: {
        const SpMat& v = s.v();
        std::vector<Eigen::Triplet<double>> tr;
        for (int c = 0; c < v.outerSize(); ++c)
          for (SpMat::InnerIterator it(v, c); it; ++it) {
            tr.emplace_back(it.row(), it.col(), it.value());
            tr.emplace_back(it.row() + v.rows(), it.col() + v.cols(), it.value());
          }
        SpMat v2(2 * v.rows(), 2 * v.cols());
        v2.setFromTriplets(tr.begin(), tr.end());
        m.congruence(v2, prefixed(s.out_layout()));
        break;
      }
    }
  }
  return m;
}

// ---------------- problem ----------------

void SdpProblem::add_block(const std::string& name, int dim, Cone cone) {
  if (block_index(name) >= 0) throw std::invalid_argument("duplicate block '" + name + "'");
  if (dim < 1) throw std::invalid_argument("block dim must be positive");
  if (cone == Cone::Free && dim != 1) throw std::invalid_argument("free blocks are scalars (dim 1)");
  blocks_.push_back({name, dim, cone});
}

void SdpProblem::add_objective(const std::string& block, const CMat& coeff) { objective_.push_back({block, coeff}); }

int SdpProblem::add_scalar_constraint(const std::string& name, std::vector<ScalarTerm> terms, Sense s, double rhs) {
  Constraint c;
  c.name = name;
  c.sense = s;
  c.matrix = false;
  c.sterms = std::move(terms);
  c.srhs = rhs;
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

int SdpProblem::add_matrix_constraint(const std::string& name, std::vector<MatrixTerm> terms, Sense s, const CMat& rhs) {
  Constraint c;
  c.name = name;
  c.sense = s;
  c.matrix = true;
  c.mterms = std::move(terms);
  c.mrhs = rhs;
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

int SdpProblem::block_index(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return static_cast<int>(i);
  return -1;
}

const Block& SdpProblem::block(const std::string& name) const {
  int i = block_index(name);
  if (i < 0) throw std::invalid_argument("unknown block '" + name + "'");
  return blocks_[i];
}

void SdpProblem::validate() const {
  auto check_coeff = [&](const ScalarTerm& t) {
    const Block& b = block(t.block);
    if (t.coeff.rows() != b.dim || t.coeff.cols() != b.dim)
      throw std::invalid_argument("coefficient for block '" + t.block + "' has wrong size");
    if ((t.coeff - t.coeff.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
      throw std::invalid_argument("coefficient for block '" + t.block + "' is not Hermitian");
    if (b.cone == Cone::Free && std::abs(t.coeff(0, 0).imag()) > 0)
      throw std::invalid_argument("free scalar coefficients must be real");
  };
  for (const auto& t : objective_) check_coeff(t);
  for (const auto& c : constraints_) {
    for (const auto& t : c.sterms) check_coeff(t);
    if (!c.matrix) continue;
    const int m = static_cast<int>(c.mrhs.rows());
    if (c.mrhs.cols() != m) throw std::invalid_argument("constraint '" + c.name + "' rhs is not square");
    for (const auto& t : c.mterms) {
      const Block& b = block(t.block);
      if (b.cone != Cone::Psd) throw std::invalid_argument("matrix terms need PSD blocks");
      if (t.map.in_dim() != b.dim || t.map.out_dim() != m)
        throw std::invalid_argument("constraint '" + c.name + "': map dims do not match block '" + t.block + "'");
    }
  }
}

bool SdpProblem::is_real(double tol) const {
  auto real = [tol](const CMat& m) { return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() <= tol; };
  for (const auto& t : objective_)
    if (!real(t.coeff)) return false;
  for (const auto& c : constraints_) {
    for (const auto& t : c.sterms)
      if (!real(t.coeff)) return false;
    if (c.matrix && !real(c.mrhs)) return false;
  }
  return true;
}

double SdpProblem::objective_value(const std::map<std::string, CMat>& x) const {
  double s = 0;
  for (const auto& t : objective_) s += (t.coeff * x.at(t.block)).trace().real();
  return s;
}

CMat SdpProblem::constraint_lhs(const Constraint& c, const std::map<std::string, CMat>& x) const {
  if (!c.matrix) {
    double s = 0;
    for (const auto& t : c.sterms) s += (t.coeff * x.at(t.block)).trace().real();
    return CMat::Constant(1, 1, s);
  }
  CMat s = CMat::Zero(c.mrhs.rows(), c.mrhs.cols());
  for (const auto& t : c.mterms) s += t.weight * t.map.apply(x.at(t.block));
  return s;
}

double SdpProblem::max_violation(const std::map<std::string, CMat>& x) const {
  double worst = 0;
  for (const auto& b : blocks_)
    if (b.cone == Cone::Psd) worst = std::max(worst, -min_eigenvalue(x.at(b.name)));
  for (const auto& c : constraints_) {
    CMat lhs = constraint_lhs(c, x);
    CMat rhs = c.matrix ? c.mrhs : CMat::Constant(1, 1, c.srhs);
    CMat d = rhs - lhs;
    d = (d + d.adjoint()) * 0.5;
    double v = 0;
    if (c.sense == Sense::Eq) v = d.cwiseAbs().maxCoeff();
    else if (c.sense == Sense::Le) v = std::max(0.0, -min_eigenvalue(d));
    else v = std::max(0.0, -min_eigenvalue(-d));
    worst = std::max(worst, v);
  }
  return worst;
}

CMat embed_matrix(const CMat& m) {
  const auto n = m.rows();
  CMat e = CMat::Zero(2 * n, 2 * n);
  e.block(0, 0, n, n) = m.real().cast<cplx>();
  e.block(n, n, n, n) = m.real().cast<cplx>();
  e.block(0, n, n, n) = (-m.imag()).cast<cplx>();
  e.block(n, 0, n, n) = m.imag().cast<cplx>();
  return e;
}

CMat extract_matrix(const CMat& e) {
  const auto n = e.rows() / 2;
  RMat re = (e.block(0, 0, n, n).real() + e.block(n, n, n, n).real()) * 0.5;
  RMat im = (e.block(n, 0, n, n).real() - e.block(0, n, n, n).real()) * 0.5;
  CMat m(n, n);
  m.real() = re;
  m.imag() = im;
  return m;
}

SdpProblem embed_complex(const SdpProblem& p) {
  p.validate();
  SdpProblem q;
  for (const auto& b : p.blocks_) q.blocks_.push_back({b.name, b.cone == Cone::Psd ? 2 * b.dim : 1, b.cone});
  auto lift = [&](const ScalarTerm& t) {
    if (p.block(t.block).cone == Cone::Free) return ScalarTerm{t.block, t.coeff.real().cast<cplx>()};
    return ScalarTerm{t.block, embed_matrix(t.coeff) * 0.5};
  };
  for (const auto& t : p.objective_) q.objective_.push_back(lift(t));
  for (const auto& c : p.constraints_) {
    Constraint d = c;
    d.sterms.clear();
    for (const auto& t : c.sterms) d.sterms.push_back(lift(t));
    if (c.matrix) {
      d.mrhs = embed_matrix(c.mrhs);
      d.mterms.clear();
      for (const auto& t : c.mterms) d.mterms.push_back({t.block, t.weight, t.map.embedded()});
    }
    q.constraints_.push_back(std::move(d));
  }
  return q;
}

nlohmann::json SdpProblem::to_json() const {
  using nlohmann::json;
  auto mat = [](const CMat& m) {
    json re = json::array(), im = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json a = json::array(), b = json::array();
      for (int c = 0; c < m.cols(); ++c) {
        a.push_back(m(r, c).real());
        b.push_back(m(r, c).imag());
      }
      re.push_back(a);
      im.push_back(b);
    }
    return json{{"re", re}, {"im", im}};
  };
  auto map_json = [](const LinearMap& m) {
    json steps = json::array();
    for (const auto& s : m.steps()) {
      json j{{"op", s.tag()}, {"in_layout", layout_to_json(s.in_layout())}, {"out_layout", layout_to_json(s.out_layout())}};
      if (s.kind() != MapStep::Kind::Congruence) j["labels"] = std::vector<std::string>(s.labels().begin(), s.labels().end());
      else {
        json t = json::array();
        for (int c = 0; c < s.v().outerSize(); ++c)
          for (SpMat::InnerIterator it(s.v(), c); it; ++it) t.push_back({it.row(), it.col(), it.value()});
        j["triplets"] = t;
      }
      steps.push_back(j);
    }
    return json{{"tag", m.tag()}, {"in_layout", layout_to_json(m.in_layout())}, {"steps", steps}};
  };
  json j;
  j["sense"] = "maximize";
  for (const auto& b : blocks_) j["blocks"].push_back({{"name", b.name}, {"dim", b.dim}, {"cone", b.cone == Cone::Psd ? "psd" : "free"}});
  j["objective"] = json::array();
  for (const auto& t : objective_) j["objective"].push_back({{"block", t.block}, {"coeff", mat(t.coeff)}});
  j["constraints"] = json::array();
  for (const auto& c : constraints_) {
    json cj{{"name", c.name}, {"sense", c.sense == Sense::Eq ? "=" : c.sense == Sense::Le ? "<=" : ">="}};
    if (c.matrix) {
      cj["kind"] = "matrix";
      for (const auto& t : c.mterms) cj["lhs"].push_back({{"block", t.block}, {"weight", t.weight}, {"map", map_json(t.map)}});
      cj["rhs"] = mat(c.mrhs);
    } else {
      cj["kind"] = "scalar";
      for (const auto& t : c.sterms) cj["lhs"].push_back({{"block", t.block}, {"coeff", mat(t.coeff)}});
      cj["rhs"] = c.srhs;
    }
    j["constraints"].push_back(cj);
  }
  return j;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::NearOptimal: return "near-optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::SolverFailure: return "solver-failure";
  }
  return "?";
}

}  // namespace distil::sdp
