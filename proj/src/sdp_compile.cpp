#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "distil/sdp.hpp"

namespace distil::sdp {

namespace {

const double kS = 1.0 / std::sqrt(2.0);

// full symmetric triplets -> upper entries on solver block `blk`, scaled by `w`
void add_upper(std::vector<SfEntry>& row, int blk, const Trips& t, double w) {
  for (const auto& e : t) {
    if (e.r == e.c) row.push_back({blk, e.r, e.r, w * e.v});
    else if (e.r < e.c) row.push_back({blk, e.r, e.c, 0.5 * w * e.v});
    else row.push_back({blk, e.c, e.r, 0.5 * w * e.v});
  }
}

void finish_row(std::vector<SfEntry>& row) {
  std::sort(row.begin(), row.end(), [](const SfEntry& a, const SfEntry& b) {
    if (a.blk != b.blk) return a.blk < b.blk;
    if (a.c != b.c) return a.c < b.c;
    return a.r < b.r;
  });
  std::vector<SfEntry> out;
  for (const auto& e : row) {
    if (!out.empty() && out.back().blk == e.blk && out.back().r == e.r && out.back().c == e.c) out.back().v += e.v;
    else out.push_back(e);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const SfEntry& e) { return std::abs(e.v) <= 1e-15; }), out.end());
  row.swap(out);
}

Trips full_trips(const RMat& m) {
  Trips t;
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r)
      if (m(r, c) != 0.0) t.push_back({r, c, m(r, c)});
  return t;
}

// normalized basis element of the symmetric matrices
Trips basis(int r, int c) {
  if (r == c) return {{r, r, 1.0}};
  return {{r, c, kS}, {c, r, kS}};
}

// <E_rc, T> for full triplets T
[[maybe_unused]]
double basis_coeff(const Trips& t, int r, int c) {
  double s = 0;
  for (const auto& e : t) {
    if (r == c) {
      if (e.r == r && e.c == r) s += e.v;
    } else if ((e.r == r && e.c == c) || (e.r == c && e.c == r)) {
      s += kS * e.v;
    }
  }
  return s;
}

double basis_coeff(const RMat& m, int r, int c) { return r == c ? m(r, r) : kS * (m(r, c) + m(c, r)); }

struct Compiled {
  StandardForm sf;
  bool entry = false;
  // slack form bookkeeping
  std::vector<int> var_block;   // model block -> solver block (psd) or free index
  std::vector<int> slack_block;  // constraint -> solver block (-1 if equality)
  std::vector<int> first_row;    // constraint -> first row
  // entry form bookkeeping
  std::vector<int> var_offset;  // model block -> first variable index
  std::vector<int> lmi_block;   // constraint -> solver block for inequalities
  std::vector<int> first_free;  // constraint -> first free column for equalities
};

int count_rows(const Constraint& c) {
  int m = c.out_dim();
  return c.matrix ? m * (m + 1) / 2 : 1;
}

Compiled compile_slack(const SdpProblem& p) {
  Compiled out;
  StandardForm& sf = out.sf;
  const auto& blocks = p.blocks();
  int nfree = 0;
  for (const auto& b : blocks) {
    if (b.cone == Cone::Psd) {
      out.var_block.push_back(static_cast<int>(sf.dims.size()));
      sf.dims.push_back(b.dim);
    } else {
      out.var_block.push_back(nfree++);
    }
  }
  for (const auto& c : p.constraints()) {
    if (c.sense == Sense::Eq) {
      out.slack_block.push_back(-1);
    } else {
      out.slack_block.push_back(static_cast<int>(sf.dims.size()));
      sf.dims.push_back(c.out_dim());
    }
  }
  for (int d : sf.dims) sf.C.push_back(RMat::Zero(d, d));
  RVec f = RVec::Zero(nfree);
  for (const auto& t : p.objective()) {
    int k = p.block_index(t.block);
    if (blocks[k].cone == Cone::Psd) sf.C[out.var_block[k]] -= t.coeff.real();
    else f(out.var_block[k]) -= t.coeff(0, 0).real();
  }
  std::vector<double> bvals;
  std::vector<std::tuple<int, int, double>> btrips;
  for (std::size_t ci = 0; ci < p.constraints().size(); ++ci) {
    const auto& c = p.constraints()[ci];
    out.first_row.push_back(static_cast<int>(sf.rows.size()));
    const double ssign = c.sense == Sense::Le ? 1.0 : -1.0;
    if (!c.matrix) {
      std::vector<SfEntry> row;
      for (const auto& t : c.sterms) {
        int k = p.block_index(t.block);
        if (blocks[k].cone == Cone::Psd) add_upper(row, out.var_block[k], full_trips(t.coeff.real()), 1.0);
        else btrips.emplace_back(static_cast<int>(sf.rows.size()), out.var_block[k], t.coeff(0, 0).real());
      }
      if (out.slack_block[ci] >= 0) row.push_back({out.slack_block[ci], 0, 0, ssign});
      finish_row(row);
      sf.rows.push_back(std::move(row));
      bvals.push_back(c.srhs);
      continue;
    }
    const int m = c.out_dim();
    RMat rhs = c.mrhs.real();
    for (int cc = 0; cc < m; ++cc)
      for (int r = 0; r <= cc; ++r) {
        std::vector<SfEntry> row;
        Trips e = basis(r, cc);
        for (const auto& t : c.mterms) {
          int k = p.block_index(t.block);
          add_upper(row, out.var_block[k], t.map.adjoint(e), t.weight);
        }
        if (out.slack_block[ci] >= 0) row.push_back({out.slack_block[ci], r, cc, ssign * (r == cc ? 1.0 : kS)});
        finish_row(row);
        sf.rows.push_back(std::move(row));
        bvals.push_back(basis_coeff(rhs, r, cc));
      }
  }
  sf.b = Eigen::Map<RVec>(bvals.data(), static_cast<Eigen::Index>(bvals.size()));
  sf.B = RMat::Zero(sf.b.size(), nfree);
  for (auto [r, j, v] : btrips) sf.B(r, j) += v;
  sf.f = f;
  return out;
}

Compiled compile_entry(const SdpProblem& p) {
  Compiled out;
  out.entry = true;
  StandardForm& sf = out.sf;
  const auto& blocks = p.blocks();
  // variables
  int nvar = 0;
  struct Var {
    int block, r, c;
  };
  std::vector<Var> vars;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    out.var_offset.push_back(nvar);
    if (blocks[k].cone == Cone::Psd) {
      for (int c = 0; c < blocks[k].dim; ++c)
        for (int r = 0; r <= c; ++r) vars.push_back({static_cast<int>(k), r, c});
      nvar += blocks[k].dim * (blocks[k].dim + 1) / 2;
    } else {
      vars.push_back({static_cast<int>(k), 0, 0});
      nvar += 1;
    }
  }
  // solver blocks: own blocks for PSD variables, then inequality LMIs
  std::vector<int> own(blocks.size(), -1);
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (blocks[k].cone == Cone::Psd) {
      own[k] = static_cast<int>(sf.dims.size());
      sf.dims.push_back(blocks[k].dim);
    }
  int nfree = 0;
  for (const auto& c : p.constraints()) {
    if (c.sense == Sense::Eq) {
      out.lmi_block.push_back(-1);
      out.first_free.push_back(nfree);
      nfree += count_rows(c);
    } else {
      out.lmi_block.push_back(static_cast<int>(sf.dims.size()));
      out.first_free.push_back(-1);
      sf.dims.push_back(c.out_dim());
    }
  }
  for (int d : sf.dims) sf.C.push_back(RMat::Zero(d, d));
  sf.rows.assign(nvar, {});
  sf.b = RVec::Zero(nvar);
  sf.B = RMat::Zero(nvar, nfree);
  sf.f = RVec::Zero(nfree);
  for (std::size_t ci = 0; ci < p.constraints().size(); ++ci) {
    const auto& c = p.constraints()[ci];
    if (c.sense == Sense::Eq) {
      if (!c.matrix) {
        sf.f(out.first_free[ci]) = c.srhs;
      } else {
        RMat rhs = c.mrhs.real();
        int e = out.first_free[ci];
        for (int cc = 0; cc < c.out_dim(); ++cc)
          for (int r = 0; r <= cc; ++r) sf.f(e++) = basis_coeff(rhs, r, cc);
      }
    } else {
      const double sg = c.sense == Sense::Le ? 1.0 : -1.0;
      sf.C[out.lmi_block[ci]] = sg * (c.matrix ? RMat(c.mrhs.real()) : RMat::Constant(1, 1, c.srhs));
    }
  }
  // group terms by block for fast per-variable assembly
  std::vector<std::vector<std::pair<int, const ScalarTerm*>>> sterms(blocks.size());
  std::vector<std::vector<std::pair<int, const MatrixTerm*>>> mterms(blocks.size());
  for (std::size_t ci = 0; ci < p.constraints().size(); ++ci) {
    for (const auto& t : p.constraints()[ci].sterms) sterms[p.block_index(t.block)].push_back({static_cast<int>(ci), &t});
    for (const auto& t : p.constraints()[ci].mterms) mterms[p.block_index(t.block)].push_back({static_cast<int>(ci), &t});
  }
  std::vector<RMat> obj(blocks.size());
  for (const auto& t : p.objective()) {
    int k = p.block_index(t.block);
    if (obj[k].size() == 0) obj[k] = RMat::Zero(blocks[k].dim, blocks[k].dim);
    obj[k] += t.coeff.real();
  }
  for (int i = 0; i < nvar; ++i) {
    const Var& v = vars[i];
    auto& row = sf.rows[i];
    const bool free = blocks[v.block].cone == Cone::Free;
    Trips e = free ? Trips{{0, 0, 1.0}} : basis(v.r, v.c);
    if (obj[v.block].size()) sf.b(i) = free ? obj[v.block](0, 0) : basis_coeff(obj[v.block], v.r, v.c);
    if (!free) add_upper(row, own[v.block], e, -1.0);
    for (auto [ci, t] : sterms[v.block]) {
      const auto& c = p.constraints()[ci];
      double g = free ? t->coeff(0, 0).real() : basis_coeff(RMat(t->coeff.real()), v.r, v.c);
      if (g == 0.0) continue;
      if (c.sense == Sense::Eq) sf.B(i, out.first_free[ci]) += g;
      else row.push_back({out.lmi_block[ci], 0, 0, c.sense == Sense::Le ? g : -g});
    }
    for (auto [ci, t] : mterms[v.block]) {
      const auto& c = p.constraints()[ci];
      Trips img = t->map.apply(e);
      if (img.empty()) continue;
      if (c.sense == Sense::Eq) {
        // column index of output entry (r, c) in upper-triangle column-major order
        std::map<std::pair<int, int>, double> acc;
        for (const auto& x : img) {
          int r = std::min(x.r, x.c), cc = std::max(x.r, x.c);
          acc[{r, cc}] += (r == cc ? 1.0 : 0.5 * std::sqrt(2.0)) * x.v;
        }
        for (auto [rc, val] : acc) {
          int col = out.first_free[ci] + rc.second * (rc.second + 1) / 2 + rc.first;
          sf.B(i, col) += t->weight * val;
        }
      } else {
        // A_i = -F_i, F_i = -w L(E_i) for <=, +w L(E_i) for >=
        add_upper(row, out.lmi_block[ci], img, c.sense == Sense::Le ? t->weight : -t->weight);
      }
    }
    finish_row(row);
  }
  return out;
}

std::pair<long, long> form_sizes(const SdpProblem& p) {
  long slack = 0, entry = 0, eq = 0;
  for (const auto& c : p.constraints()) {
    slack += count_rows(c);
    if (c.sense == Sense::Eq) eq += count_rows(c);
  }
  for (const auto& b : p.blocks()) entry += b.cone == Cone::Psd ? b.dim * (b.dim + 1) / 2 : 1;
  return {slack, entry + eq};
}

CMat to_cmat(const RMat& m) { return m.cast<cplx>(); }

SdpSolution extract(const SdpProblem& p, const Compiled& cp, const IpmResult& r) {
  SdpSolution s;
  s.status = r.status;
  // the entry form solves the model as the solver dual, so infeasibility roles swap
  if (cp.entry && r.status == SolveStatus::Infeasible) s.status = SolveStatus::Unbounded;
  else if (cp.entry && r.status == SolveStatus::Unbounded) s.status = SolveStatus::Infeasible;
  s.iterations = r.iterations;
  s.primal_infeasibility = r.pinf;
  s.dual_infeasibility = r.dinf;
  s.rel_gap = r.gap;
  s.form = cp.entry ? "entry" : "slack";
  s.schur_size = cp.sf.m();
  const auto& blocks = p.blocks();
  if (!cp.entry) {
    s.primal_objective = -r.pobj;
    s.dual_objective = -r.dobj;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (blocks[k].cone == Cone::Psd) s.block_values[blocks[k].name] = to_cmat(r.X[cp.var_block[k]]);
      else s.block_values[blocks[k].name] = CMat::Constant(1, 1, r.u.size() ? r.u(cp.var_block[k]) : 0.0);
    }
    for (std::size_t ci = 0; ci < p.constraints().size(); ++ci) {
      const auto& c = p.constraints()[ci];
      if (cp.slack_block[ci] >= 0) {
        s.constraint_duals.push_back(to_cmat(r.Z[cp.slack_block[ci]]));
        continue;
      }
      const int m = c.out_dim();
      RMat y = RMat::Zero(m, m);
      int row = cp.first_row[ci];
      for (int cc = 0; cc < m; ++cc)
        for (int rr = 0; rr <= cc; ++rr) {
          double v = -r.y(row++);
          if (rr == cc) y(rr, rr) = v;
          else y(rr, cc) = y(cc, rr) = kS * v;
        }
      s.constraint_duals.push_back(to_cmat(y));
    }
  } else {
    s.primal_objective = r.dobj;
    s.dual_objective = r.pobj;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      int off = cp.var_offset[k];
      if (blocks[k].cone == Cone::Free) {
        s.block_values[blocks[k].name] = CMat::Constant(1, 1, r.y(off));
        continue;
      }
      const int n = blocks[k].dim;
      RMat x(n, n);
      for (int c = 0; c < n; ++c)
        for (int rr = 0; rr <= c; ++rr) {
          double v = r.y(off++);
          if (rr == c) x(rr, rr) = v;
          else x(rr, c) = x(c, rr) = kS * v;
        }
      s.block_values[blocks[k].name] = to_cmat(x);
    }
    for (std::size_t ci = 0; ci < p.constraints().size(); ++ci) {
      const auto& c = p.constraints()[ci];
      if (cp.lmi_block[ci] >= 0) {
        s.constraint_duals.push_back(to_cmat(r.X[cp.lmi_block[ci]]));
        continue;
      }
      const int m = c.out_dim();
      RMat y = RMat::Zero(m, m);
      int e = cp.first_free[ci];
      for (int cc = 0; cc < m; ++cc)
        for (int rr = 0; rr <= cc; ++rr) {
          double v = r.u(e++);
          if (rr == cc) y(rr, rr) = v;
          else y(rr, cc) = y(cc, rr) = kS * v;
        }
      s.constraint_duals.push_back(to_cmat(y));
    }
  }
  return s;
}

}  // namespace

SdpSolution solve(const SdpProblem& p0, double tol, const SolveOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  p0.validate();
  const bool complex = !p0.is_real();
  SdpProblem p = complex ? embed_complex(p0) : p0;
  auto [slack_rows, entry_rows] = form_sizes(p);
  Form form = opt.form;
  if (form == Form::Auto) form = entry_rows < slack_rows ? Form::Entry : Form::Slack;
  Compiled cp = form == Form::Entry ? compile_entry(p) : compile_slack(p);
  IpmResult r = ipm_solve(cp.sf, tol, opt);
  SdpSolution s = extract(p, cp, r);
  if (complex) {
    for (const auto& b : p0.blocks())
      if (b.cone == Cone::Psd) s.block_values[b.name] = extract_matrix(s.block_values[b.name]);
    for (std::size_t ci = 0; ci < p0.constraints().size(); ++ci)
      if (p0.constraints()[ci].matrix) s.constraint_duals[ci] = extract_matrix(s.constraint_duals[ci]) * 2.0;
  }
  for (auto& [name, m] : s.block_values) m = (m + m.adjoint()) * 0.5;
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

}  // namespace distil::sdp
