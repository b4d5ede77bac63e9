#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "distil/kernels.hpp"
#include "distil/sdp.hpp"

namespace distil::sdp {

namespace {

// Full (both triangles) entries of one row restricted to one block.
struct Piece {
  int row;
  int start, len;  // into the block arrays
};

struct BlockData {
  int n = 0;
  std::vector<Piece> pieces;  // sorted by row
  std::vector<int> r, c, idx;
  std::vector<double> v;
};

struct Problem {
  int m = 0, nf = 0;
  std::vector<BlockData> blk;
  std::vector<RMat> C;
  RVec b, f;
  RMat B;
  double ntot = 0;
};

Problem build(const StandardForm& sf, RVec& rowscale, double& sb, double& sc) {
  Problem p;
  p.m = sf.m();
  p.nf = static_cast<int>(sf.B.cols());
  const int nb = static_cast<int>(sf.dims.size());
  rowscale = RVec::Ones(p.m);
  for (int i = 0; i < p.m; ++i) {
    double s = 0;
    for (const auto& e : sf.rows[i]) s += (e.r == e.c ? 1.0 : 2.0) * e.v * e.v;
    if (p.nf) s += sf.B.row(i).squaredNorm();
    if (s > 0) rowscale(i) = 1.0 / std::sqrt(s);
  }
  p.b = rowscale.asDiagonal() * sf.b;
  p.B = p.nf ? RMat(rowscale.asDiagonal() * sf.B) : RMat::Zero(p.m, 0);
  sb = std::max(1.0, p.b.norm());
  p.b /= sb;
  double cn = sf.f.size() ? sf.f.squaredNorm() : 0.0;
  for (const auto& c : sf.C) cn += c.squaredNorm();
  sc = std::max(1.0, std::sqrt(cn));
  p.C.resize(nb);
  for (int k = 0; k < nb; ++k) p.C[k] = sf.C[k] / sc;
  p.f = sf.f.size() ? RVec(sf.f / sc) : RVec::Zero(p.nf);
  p.blk.resize(nb);
  for (int k = 0; k < nb; ++k) {
    p.blk[k].n = sf.dims[k];
    p.ntot += sf.dims[k];
  }
  for (int i = 0; i < p.m; ++i) {
    const auto& row = sf.rows[i];
    std::size_t t = 0;
    while (t < row.size()) {
      int k = row[t].blk;
      BlockData& bd = p.blk[k];
      Piece pc{i, static_cast<int>(bd.v.size()), 0};
      for (; t < row.size() && row[t].blk == k; ++t) {
        const auto& e = row[t];
        double w = e.v * rowscale(i);
        bd.r.push_back(e.r);
        bd.c.push_back(e.c);
        bd.v.push_back(w);
        bd.idx.push_back(e.r + e.c * bd.n);
        if (e.r != e.c) {
          bd.r.push_back(e.c);
          bd.c.push_back(e.r);
          bd.v.push_back(w);
          bd.idx.push_back(e.c + e.r * bd.n);
        }
      }
      pc.len = static_cast<int>(bd.v.size()) - pc.start;
      bd.pieces.push_back(pc);
    }
  }
  return p;
}

RVec apply_A(const Problem& p, const std::vector<RMat>& X) {
  const auto& kt = kernels::active();
  RVec out = RVec::Zero(p.m);
  for (std::size_t k = 0; k < p.blk.size(); ++k) {
    const auto& bd = p.blk[k];
    for (const auto& pc : bd.pieces)
      out(pc.row) += kt.gather_dot(bd.v.data() + pc.start, bd.idx.data() + pc.start, X[k].data(), pc.len);
  }
  return out;
}

std::vector<RMat> apply_At(const Problem& p, const RVec& y) {
  std::vector<RMat> out(p.blk.size());
  for (std::size_t k = 0; k < p.blk.size(); ++k) {
    const auto& bd = p.blk[k];
    out[k] = RMat::Zero(bd.n, bd.n);
    double* d = out[k].data();
    for (const auto& pc : bd.pieces) {
      double yi = y(pc.row);
      if (yi == 0.0) continue;
      for (int t = pc.start; t < pc.start + pc.len; ++t) d[bd.idx[t]] += yi * bd.v[t];
    }
  }
  return out;
}

// M_ij = tr(A_i X A_j Zi), upper triangle then mirrored
RMat schur(const Problem& p, const std::vector<RMat>& X, const std::vector<RMat>& Zi) {
  const auto& kt = kernels::active();
  RMat M = RMat::Zero(p.m, p.m);
  for (std::size_t k = 0; k < p.blk.size(); ++k) {
    const auto& bd = p.blk[k];
    const int n = bd.n;
    const int np = static_cast<int>(bd.pieces.size());
    std::vector<long> suffix(np + 1, 0);
    for (int q = np - 1; q >= 0; --q) suffix[q] = suffix[q + 1] + bd.pieces[q].len;
    RMat Pt, Qt, G;
    for (int a = 0; a < np; ++a) {
      const Piece& pi = bd.pieces[a];
      const int K = pi.len;
      Pt.resize(K, n);
      Qt.resize(K, n);
      for (int t = 0; t < K; ++t) {
        int e = pi.start + t;
        double w = bd.v[e];
        // G = X A_i Zi = sum_t v_t X(:, r_t) Zi(c_t, :)
        Pt.row(t) = w * X[k].col(bd.r[e]).transpose();
        Qt.row(t) = Zi[k].col(bd.c[e]).transpose();
      }
      const bool dense = suffix[a] * 4 > static_cast<long>(n) * n;
      if (dense) {
        G.noalias() = Pt.transpose() * Qt;
        for (int q = a; q < np; ++q) {
          const Piece& pj = bd.pieces[q];
          M(pi.row, pj.row) += kt.gather_dot(bd.v.data() + pj.start, bd.idx.data() + pj.start, G.data(), pj.len);
        }
      } else {
        for (int q = a; q < np; ++q) {
          const Piece& pj = bd.pieces[q];
          double s = 0;
          for (int t = pj.start; t < pj.start + pj.len; ++t)
            s += bd.v[t] * kt.dot(Pt.col(bd.r[t]).data(), Qt.col(bd.c[t]).data(), K);
          M(pi.row, pj.row) += s;
        }
      }
    }
  }
  M.triangularView<Eigen::StrictlyLower>() = M.transpose().triangularView<Eigen::StrictlyLower>();
  return M;
}

double inner(const std::vector<RMat>& a, const std::vector<RMat>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
  return s;
}

double norm(const std::vector<RMat>& a) { return std::sqrt(inner(a, a)); }

RMat sym(const RMat& m) { return 0.5 * (m + m.transpose()); }

// largest alpha with X + alpha dX psd (inf if unbounded)
double max_step(const RMat& X, const RMat& dX) {
  Eigen::LLT<RMat> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  RMat L = llt.matrixL();
  RMat t = llt.matrixL().solve(dX);
  t = llt.matrixL().solve(t.transpose().eval());
  Eigen::SelfAdjointEigenSolver<RMat> es(sym(t), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

struct Factor {
  Eigen::LLT<RMat> llt;
  Eigen::LDLT<RMat> ldlt;
  bool use_ldlt = false;
  RMat MiB;                   // M^{-1} B
  Eigen::LDLT<RMat> schurB;   // B' M^{-1} B
  bool ok = true;
};

void factor(Factor& F, RMat M, const RMat& B) {
  F.llt.compute(M);
  F.use_ldlt = false;
  if (F.llt.info() != Eigen::Success) {
    double reg = 1e-14 * std::max(1.0, M.diagonal().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt) {
      M.diagonal().array() += reg;
      F.llt.compute(M);
      if (F.llt.info() == Eigen::Success) break;
      reg *= 100;
    }
    if (F.llt.info() != Eigen::Success) {
      F.ok = false;
      return;
    }
  }
  F.ok = true;
  if (B.cols()) {
    F.MiB = F.llt.solve(B);
    RMat S = B.transpose() * F.MiB;
    S.diagonal().array() += 1e-14 * std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
    F.schurB.compute(S);
  }
}

void solve_kkt(const Factor& F, const RMat& B, const RVec& h, const RVec& rf, RVec& dy, RVec& du) {
  RVec Mih = F.llt.solve(h);
  if (B.cols()) {
    du = F.schurB.solve(B.transpose() * Mih - rf);
    dy = Mih - F.MiB * du;
  } else {
    du.resize(0);
    dy = Mih;
  }
}

}  // namespace

IpmResult ipm_solve(const StandardForm& sf, double tol, const SolveOptions& opt) {
  RVec rs;
  double sb = 1, sc = 1;
  Problem p = build(sf, rs, sb, sc);
  const int nb = static_cast<int>(p.blk.size());
  const int m = p.m;

  std::vector<RMat> X(nb), Z(nb);
  for (int k = 0; k < nb; ++k) {
    const int n = p.blk[k].n;
    double xi = std::max(10.0, std::sqrt(static_cast<double>(n)));
    double eta = std::max({10.0, std::sqrt(static_cast<double>(n)), p.C[k].norm()});
    X[k] = xi * RMat::Identity(n, n);
    Z[k] = eta * RMat::Identity(n, n);
  }
  RVec y = RVec::Zero(m), u = RVec::Zero(p.nf);

  const double bnorm = p.b.norm();
  double cnorm = p.f.squaredNorm();
  for (const auto& c : p.C) cnorm += c.squaredNorm();
  cnorm = std::sqrt(cnorm);

  IpmResult res;
  res.status = SolveStatus::SolverFailure;
  int stall = 0;
  double best_err = std::numeric_limits<double>::infinity();

  auto finish = [&](SolveStatus st, int it, double pobj, double dobj, double pinf, double dinf, double gap) {
    res.status = st;
    res.iterations = it;
    res.pinf = pinf;
    res.dinf = dinf;
    res.gap = gap;
    res.pobj = pobj * sb * sc;
    res.dobj = dobj * sb * sc;
    res.X.resize(nb);
    res.Z.resize(nb);
    for (int k = 0; k < nb; ++k) {
      res.X[k] = X[k] * sb;
      res.Z[k] = Z[k] * sc;
    }
    res.y = rs.asDiagonal() * y * sc;
    res.u = u * sb;
  };

  for (int it = 0;; ++it) {
    RVec AX = apply_A(p, X);
    RVec Rp = p.b - AX - (p.nf ? RVec(p.B * u) : RVec::Zero(m));
    std::vector<RMat> Aty = apply_At(p, y);
    std::vector<RMat> Rd(nb);
    for (int k = 0; k < nb; ++k) Rd[k] = p.C[k] - Aty[k] - Z[k];
    RVec rf = p.nf ? RVec(p.f - p.B.transpose() * y) : RVec::Zero(0);

    double pobj = inner(p.C, X) + (p.nf ? p.f.dot(u) : 0.0);
    double dobj = p.b.dot(y);
    double pinf = Rp.norm() / (1.0 + bnorm);
    double dinf = std::sqrt(std::pow(norm(Rd), 2) + rf.squaredNorm()) / (1.0 + cnorm);
    double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    double mu = inner(X, Z) / p.ntot;
    double err = std::max({pinf, dinf, gap});
    if (opt.verbose)
      std::fprintf(stderr, "it %3d  pobj % .9e  dobj % .9e  pinf %.2e  dinf %.2e  gap %.2e  mu %.2e\n", it,
                   pobj * sb * sc, dobj * sb * sc, pinf, dinf, gap, mu);

    if (err < tol) {
      finish(SolveStatus::Optimal, it, pobj, dobj, pinf, dinf, gap);
      return res;
    }
    // unbounded dual ray: primal infeasible; unbounded primal: dual infeasible
    if (dobj > 1e8 && pinf > 1e-6) {
      finish(SolveStatus::Infeasible, it, pobj, dobj, pinf, dinf, gap);
      return res;
    }
    if (pobj < -1e8 && dinf > 1e-6) {
      finish(SolveStatus::Unbounded, it, pobj, dobj, pinf, dinf, gap);
      return res;
    }
    if (err < best_err * 0.95) {
      best_err = err;
      stall = 0;
    } else {
      ++stall;
    }
    if (it >= opt.max_iters || stall > 12) {
      finish(err < 1e-5 ? SolveStatus::NearOptimal : SolveStatus::SolverFailure, it, pobj, dobj, pinf, dinf, gap);
      return res;
    }

    std::vector<RMat> Zi(nb);
    for (int k = 0; k < nb; ++k) {
      Eigen::LLT<RMat> llt(Z[k]);
      Zi[k] = sym(llt.solve(RMat::Identity(p.blk[k].n, p.blk[k].n)));
    }
    Factor F;
    factor(F, schur(p, X, Zi), p.B);
    if (!F.ok) {
      finish(err < 1e-5 ? SolveStatus::NearOptimal : SolveStatus::SolverFailure, it, pobj, dobj, pinf, dinf, gap);
      return res;
    }
    std::vector<RMat> XRdZi(nb);
    for (int k = 0; k < nb; ++k) XRdZi[k] = X[k] * Rd[k] * Zi[k];
    const RVec AXRdZi = apply_A(p, XRdZi);

    auto direction = [&](const std::vector<RMat>& Rc, RVec& dy, RVec& du, std::vector<RMat>& dX,
                         std::vector<RMat>& dZ) {
      RVec h = Rp - apply_A(p, Rc) + AXRdZi;
      solve_kkt(F, p.B, h, rf, dy, du);
      std::vector<RMat> Atdy = apply_At(p, dy);
      dX.resize(nb);
      dZ.resize(nb);
      for (int k = 0; k < nb; ++k) {
        dZ[k] = Rd[k] - Atdy[k];
        dX[k] = sym(Rc[k] - X[k] * dZ[k] * Zi[k]);
      }
    };
    auto steps = [&](const std::vector<RMat>& dX, const std::vector<RMat>& dZ, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = ap;
      for (int k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(X[k], dX[k]));
        ad = std::min(ad, max_step(Z[k], dZ[k]));
      }
    };

    // predictor
    std::vector<RMat> Rc(nb);
    for (int k = 0; k < nb; ++k) Rc[k] = -X[k];
    RVec dy, du;
    std::vector<RMat> dX, dZ;
    direction(Rc, dy, du, dX, dZ);
    double ap, ad;
    steps(dX, dZ, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = 0;
    for (int k = 0; k < nb; ++k) mu_aff += ((X[k] + ap * dX[k]).array() * (Z[k] + ad * dZ[k]).array()).sum();
    mu_aff /= p.ntot;
    double sigma = std::clamp(std::pow(mu_aff / mu, 3), 0.0, 1.0);

    // corrector
    for (int k = 0; k < nb; ++k) Rc[k] = sigma * mu * Zi[k] - X[k] - dX[k] * dZ[k] * Zi[k];
    direction(Rc, dy, du, dX, dZ);
    steps(dX, dZ, ap, ad);
    double gamma = 0.9 + 0.09 * std::min(std::min(ap, ad), 1.0);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (ap < 1e-10 && ad < 1e-10) {
      finish(err < 1e-5 ? SolveStatus::NearOptimal : SolveStatus::SolverFailure, it, pobj, dobj, pinf, dinf, gap);
      return res;
    }
    for (int k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * dX[k]);
      Z[k] = sym(Z[k] + ad * dZ[k]);
    }
    if (p.nf) u += ap * du;
    y += ad * dy;
  }
}

}  // namespace distil::sdp
