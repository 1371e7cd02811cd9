#include "rrbeam/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace rrbeam::conic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Problem construction helpers
// ---------------------------------------------------------------------------

LinExpr& LinExpr::add_block(int block, const SymMatrix& g) {
  auto it = block_coeffs.find(block);
  if (it == block_coeffs.end())
    block_coeffs.emplace(block, g);
  else
    it->second = it->second + g;
  return *this;
}

LinExpr& LinExpr::add_scalar(int scalar, double w) {
  scalar_coeffs[scalar] += w;
  return *this;
}

LinExpr& LinExpr::add_constant(double v) {
  constant += v;
  return *this;
}

LinExpr& LinExpr::add(const LinExpr& other, double w) {
  for (const auto& [b, g] : other.block_coeffs) add_block(b, g.scaled(w));
  for (const auto& [s, v] : other.scalar_coeffs) add_scalar(s, w * v);
  constant += w * other.constant;
  return *this;
}

LinExpr& LmiConstraint::entry(int i, int j) {
  if (i > j) std::swap(i, j);
  return entries[size_t(i) * dim - size_t(i) * (i + 1) / 2 + j];
}

const LinExpr& LmiConstraint::entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  return entries[size_t(i) * dim - size_t(i) * (i + 1) / 2 + j];
}

int Problem::add_psd_block(const std::string& name, int dim) {
  psd_blocks.emplace_back(name, dim);
  return int(psd_blocks.size()) - 1;
}

int Problem::add_nonneg_scalar(const std::string& name) {
  nonneg_scalars.push_back(name);
  return int(nonneg_scalars.size()) - 1;
}

LmiConstraint& Problem::add_lmi(const std::string& name, int dim) {
  LmiConstraint lmi;
  lmi.dim = dim;
  lmi.name = name;
  lmi.entries.assign(size_t(dim) * (dim + 1) / 2, LinExpr{});
  lmi_constraints.push_back(std::move(lmi));
  return lmi_constraints.back();
}

void Problem::add_linear(const std::string& name, LinExpr expr, Sense sense) {
  linear_constraints.push_back({std::move(expr), sense, name});
}

double Problem::eval(const LinExpr& e, const std::vector<SymMatrix>& blocks,
                     const std::vector<double>& scalars) const {
  double v = e.constant;
  for (const auto& [b, g] : e.block_coeffs) v += inner(g, blocks[b]);
  for (const auto& [s, w] : e.scalar_coeffs) v += w * scalars[s];
  return v;
}

namespace {

void validate_expr(const Problem& p, const LinExpr& e, const std::string& where) {
  if (!std::isfinite(e.constant)) throw InvalidInput(where + ": non-finite constant");
  for (const auto& [b, g] : e.block_coeffs) {
    if (b < 0 || b >= int(p.psd_blocks.size())) throw InvalidInput(where + ": bad block ref");
    if (g.dim() != p.psd_blocks[b].second) throw InvalidInput(where + ": coefficient dim mismatch");
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j)
        if (!std::isfinite(g(i, j))) throw InvalidInput(where + ": non-finite coefficient");
  }
  for (const auto& [s, w] : e.scalar_coeffs) {
    if (s < 0 || s >= int(p.nonneg_scalars.size())) throw InvalidInput(where + ": bad scalar ref");
    if (!std::isfinite(w)) throw InvalidInput(where + ": non-finite coefficient");
  }
}

}  // namespace

void Problem::validate() const {
  std::set<std::string> names;
  for (const auto& [name, dim] : psd_blocks) {
    if (dim < 1) throw InvalidInput("conic: block dimension must be >= 1");
    if (!names.insert(name).second) throw InvalidInput("conic: duplicate variable name " + name);
  }
  for (const auto& name : nonneg_scalars)
    if (!names.insert(name).second) throw InvalidInput("conic: duplicate variable name " + name);
  validate_expr(*this, objective, "objective");
  for (const auto& lc : linear_constraints) validate_expr(*this, lc.expr, "constraint " + lc.name);
  for (const auto& lmi : lmi_constraints) {
    if (lmi.dim < 1) throw InvalidInput("conic: LMI dimension must be >= 1");
    if (int(lmi.entries.size()) != lmi.dim * (lmi.dim + 1) / 2)
      throw InvalidInput("conic: LMI entry count mismatch in " + lmi.name);
    for (const auto& e : lmi.entries) validate_expr(*this, e, "LMI " + lmi.name);
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max_iter";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Dense linear-algebra kernels (solver-internal)
// ---------------------------------------------------------------------------

namespace {

// Lower-triangular Cholesky; returns false if a pivot drops below tol.
bool cholesky(const Mat& a, Mat& l, double rel_tol = 1e-14) {
  const int n = a.rows();
  l = Mat(n, n);
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double tol = rel_tol * std::max(max_diag, 1e-300);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < n && k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) return false;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double v = a(i, j);
      const double* li = l.data() + size_t(i) * n;
      const double* lj = l.data() + size_t(j) * n;
      for (int k = 0; k < j; ++k) v -= li[k] * lj[k];
      l(i, j) = v / ljj;
    }
  }
  return true;
}

// Solves L y = b and then L^T x = y in place.
void chol_solve(const Mat& l, std::vector<double>& b) {
  const int n = l.rows();
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= l(i, k) * b[k];
    b[i] = v / l(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < n; ++k) v -= l(k, i) * b[k];
    b[i] = v / l(i, i);
  }
}

// Householder tridiagonalization with accumulation of the orthogonal
// transform in z (EISPACK tred2 lineage). d gets the diagonal, e the
// subdiagonal in e[1..n-1].
void tridiagonalize(Mat& z, std::vector<double>& d, std::vector<double>& e) {
  const int n = z.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::abs(z(i, k));
      if (scale == 0.0) {
        e[i] = z(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          z(i, k) /= scale;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        z(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
          for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
          e[j] = g / h;
          f += e[j] * z(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = z(i, j);
          const double gj = e[j] - hh * f;
          e[j] = gj;
          for (int k = 0; k <= j; ++k) z(j, k) -= f * e[k] + gj * z(i, k);
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (int j = 0; j < i; ++j) {
        double g = 0.0;
        for (int k = 0; k < i; ++k) g += z(i, k) * z(k, j);
        for (int k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      z(j, i) = 0.0;
      z(i, j) = 0.0;
    }
  }
}

// Householder tridiagonalization without accumulation (eigenvalues only).
void tridiagonalize_novec(Mat& a, std::vector<double>& d, std::vector<double>& e) {
  const int n = a.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::abs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (int k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = a(i, j);
          const double gj = e[j] - hh * f;
          e[j] = gj;
          for (int k = 0; k <= j; ++k) a(j, k) -= f * e[k] + gj * a(i, k);
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) d[i] = a(i, i);
}

// Implicit-shift QL on a tridiagonal; rotations are applied to the columns
// of z when it is non-null. Returns false if an eigenvalue fails to
// converge.
bool tql(std::vector<double>& d, std::vector<double>& e, Mat* z) {
  const int n = int(d.size());
  if (n == 1) return true;
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-300 + std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) return false;
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z) {
            for (int k = 0; k < z->rows(); ++k) {
              f = (*z)(k, i + 1);
              (*z)(k, i + 1) = s * (*z)(k, i) + c * f;
              (*z)(k, i) = c * (*z)(k, i) - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return true;
}

// Eigen-decomposition of a dense symmetric matrix (ascending order not
// guaranteed; callers sort if they care). Fast path for the solver.
bool sym_eig(const Mat& a, std::vector<double>& evals, Mat& evecs) {
  evecs = a;
  std::vector<double> e;
  tridiagonalize(evecs, evals, e);
  return tql(evals, e, &evecs);
}

double sym_min_eig(const Mat& a) {
  const int n = a.rows();
  if (n == 1) return a(0, 0);
  if (n == 2) {
    const double mid = 0.5 * (a(0, 0) + a(1, 1));
    return mid - std::hypot(0.5 * (a(0, 0) - a(1, 1)), a(0, 1));
  }
  Mat w = a;
  std::vector<double> d, e;
  tridiagonalize_novec(w, d, e);
  if (!tql(d, e, nullptr)) return -kInf;
  return *std::min_element(d.begin(), d.end());
}

// ---------------------------------------------------------------------------
// Canonical standard form:  min <c, x>  s.t.  <A_l, x> = b_l,  x in K,
// where K is a product of PSD cones (declared blocks + LMI slacks) and the
// nonnegative orthant (declared scalars + inequality slacks).
// ---------------------------------------------------------------------------

struct CanonRow {
  std::map<int, SymMatrix> blocks;
  std::map<int, double> scalars;
  double rhs = 0.0;
};

struct CanonForm {
  std::vector<int> block_dims;   // declared blocks first, then LMI slacks
  int n_scalars = 0;             // declared scalars first, then ineq slacks
  std::vector<SymMatrix> c_blocks;  // objective coefficient per block (may be dim 0 = zero)
  std::vector<double> c_scalars;
  std::vector<CanonRow> rows;
  int n_declared_blocks = 0;
  int n_declared_scalars = 0;
  double obj_constant = 0.0;
};

CanonForm canonicalize(const Problem& p) {
  CanonForm cf;
  cf.n_declared_blocks = int(p.psd_blocks.size());
  cf.n_declared_scalars = int(p.nonneg_scalars.size());
  for (const auto& [name, dim] : p.psd_blocks) cf.block_dims.push_back(dim);
  cf.n_scalars = cf.n_declared_scalars;
  cf.obj_constant = p.objective.constant;

  cf.c_blocks.assign(cf.block_dims.size(), SymMatrix());
  for (const auto& [b, g] : p.objective.block_coeffs) cf.c_blocks[b] = g;
  cf.c_scalars.assign(cf.n_scalars, 0.0);
  for (const auto& [s, w] : p.objective.scalar_coeffs) cf.c_scalars[s] = w;

  // Linear constraints: slack scalars convert inequalities to equalities.
  for (const auto& lc : p.linear_constraints) {
    CanonRow row;
    row.blocks = lc.expr.block_coeffs;
    row.scalars = lc.expr.scalar_coeffs;
    row.rhs = -lc.expr.constant;
    if (lc.sense != Sense::Equal) {
      const int slack = cf.n_scalars++;
      cf.c_scalars.push_back(0.0);
      row.scalars[slack] = (lc.sense == Sense::LessEqual) ? 1.0 : -1.0;
    }
    cf.rows.push_back(std::move(row));
  }

  // LMIs: a PSD slack block equated entrywise with the affine matrix.
  for (const auto& lmi : p.lmi_constraints) {
    const int slack_block = int(cf.block_dims.size());
    cf.block_dims.push_back(lmi.dim);
    cf.c_blocks.emplace_back();
    for (int i = 0; i < lmi.dim; ++i) {
      for (int j = i; j < lmi.dim; ++j) {
        const LinExpr& e = lmi.entry(i, j);
        CanonRow row;
        row.blocks = e.block_coeffs;
        row.scalars = e.scalar_coeffs;
        row.rhs = -e.constant;
        SymMatrix pick(lmi.dim);
        pick.set(i, j, i == j ? -1.0 : -0.5);
        row.blocks[slack_block] = pick;
        cf.rows.push_back(std::move(row));
      }
    }
  }
  return cf;
}

double frob(const SymMatrix& m) { return m.dim() == 0 ? 0.0 : m.frobenius_norm(); }

// Ruiz-style equilibration at block granularity plus objective / rhs
// normalization. Solutions of the scaled problem map back via
// x_k = d_k * xhat_k / s_b,  y_l = e_l * yhat_l / s_c.
struct Scaling {
  std::vector<double> d_block, d_scalar, e_row;
  double s_c = 1.0, s_b = 1.0;
};

Scaling equilibrate(CanonForm& cf) {
  Scaling sc;
  sc.d_block.assign(cf.block_dims.size(), 1.0);
  sc.d_scalar.assign(cf.n_scalars, 1.0);
  sc.e_row.assign(cf.rows.size(), 1.0);

  auto clamp = [](double v) { return std::min(1e8, std::max(1e-8, v)); };

  for (int pass = 0; pass < 4; ++pass) {
    // Column (variable-group) norms over rows and objective.
    std::vector<double> colb(cf.block_dims.size(), 0.0), cols(cf.n_scalars, 0.0);
    for (const auto& row : cf.rows) {
      for (const auto& [b, g] : row.blocks) colb[b] = std::max(colb[b], frob(g));
      for (const auto& [s, w] : row.scalars) cols[s] = std::max(cols[s], std::abs(w));
    }
    for (size_t b = 0; b < colb.size(); ++b) {
      const double f = colb[b] > 0.0 ? clamp(1.0 / std::sqrt(colb[b])) : 1.0;
      sc.d_block[b] *= f;
      for (auto& row : cf.rows) {
        auto it = row.blocks.find(int(b));
        if (it != row.blocks.end()) it->second = it->second.scaled(f);
      }
      if (cf.c_blocks[b].dim() > 0) cf.c_blocks[b] = cf.c_blocks[b].scaled(f);
    }
    for (int s = 0; s < cf.n_scalars; ++s) {
      const double f = cols[s] > 0.0 ? clamp(1.0 / std::sqrt(cols[s])) : 1.0;
      sc.d_scalar[s] *= f;
      for (auto& row : cf.rows) {
        auto it = row.scalars.find(s);
        if (it != row.scalars.end()) it->second *= f;
      }
      cf.c_scalars[s] *= f;
    }
    // Row norms.
    for (size_t l = 0; l < cf.rows.size(); ++l) {
      auto& row = cf.rows[l];
      double nrm = 0.0;
      for (const auto& [b, g] : row.blocks) nrm = std::max(nrm, frob(g));
      for (const auto& [s, w] : row.scalars) nrm = std::max(nrm, std::abs(w));
      const double f = nrm > 0.0 ? clamp(1.0 / std::sqrt(nrm)) : 1.0;
      sc.e_row[l] *= f;
      for (auto& [b, g] : row.blocks) g = g.scaled(f);
      for (auto& [s, w] : row.scalars) w *= f;
      row.rhs *= f;
    }
  }

  double cnorm = 0.0;
  for (const auto& g : cf.c_blocks) cnorm += frob(g) * frob(g);
  for (double w : cf.c_scalars) cnorm += w * w;
  cnorm = std::sqrt(cnorm);
  sc.s_c = 1.0 / std::max(1.0, cnorm);
  for (auto& g : cf.c_blocks)
    if (g.dim() > 0) g = g.scaled(sc.s_c);
  for (auto& w : cf.c_scalars) w *= sc.s_c;

  double bnorm = 0.0;
  for (const auto& row : cf.rows) bnorm += row.rhs * row.rhs;
  bnorm = std::sqrt(bnorm);
  sc.s_b = 1.0 / std::max(1.0, bnorm);
  for (auto& row : cf.rows) row.rhs *= sc.s_b;

  return sc;
}

// ---------------------------------------------------------------------------
// HSDE interior-point method with NT scaling and Mehrotra correction
// ---------------------------------------------------------------------------

// Per-row, per-block coefficient in factored form: G = sum_f w_f q_f q_f^T
// with q_f living in the block's factor pool. Rows whose coefficients have
// small rank (the EFIM-map rows) then cost matrix-vector work instead of
// matrix-matrix work inside the Schur-complement assembly.
struct FactorRef {
  double w;
  int pool_index;
};

struct BlockCone {
  int n = 0;
  bool factored = false;                 // all row coefficients factorable
  bool c_isotropic = false;              // objective coefficient == c_iso * I
  double c_iso = 0.0;
  std::vector<std::vector<double>> pool; // factor vectors
  // Per-iteration NT state.
  Mat r, r_inv;            // R and R^{-1}: R^{-1} X R^{-T} = R^T S R = diag(lambda)
  Mat t;                   // R R^T (H^{-1} congruence kernel)
  Mat rtr;                 // R^T R
  std::vector<double> lambda;
  std::vector<Mat> tq;     // T * pool vectors
  std::vector<Mat> rq;     // R^T * pool vectors  (as column matrices n x 1)
};

struct Iterate {
  std::vector<Mat> xb, sb;       // PSD blocks
  std::vector<double> xs, ss;    // orthant coordinates
  std::vector<double> y;
  double tau = 1.0, kappa = 1.0;
};

struct Direction {
  std::vector<Mat> dxb, dsb;     // unscaled block directions
  std::vector<Mat> u_hat, v_hat; // scaled block directions
  std::vector<double> dxs, dss, dy;
  double dtau = 0.0, dkappa = 0.0;
};

class Ipm {
 public:
  Ipm(const CanonForm& cf, const SolveOptions& opts) : cf_(cf), opts_(opts) {
    nb_ = int(cf.block_dims.size());
    m_ = int(cf.rows.size());
    setup_structure();
  }

  SolveStatus run(Iterate& it, int& iters);

 private:
  const CanonForm& cf_;
  const SolveOptions& opts_;
  int nb_ = 0, m_ = 0;
  double nu_deg_ = 0.0;
  std::vector<BlockCone> cones_;
  // factors_[l][k] : factored coefficient of row l on block k (only when
  // cones_[k].factored);
  std::vector<std::vector<std::vector<FactorRef>>> factors_;
  std::vector<double> w_orth_;  // orthant NT scaling w_j = sqrt(x_j / s_j)
  std::vector<double> lam_orth_;

  // Per-iteration caches.
  std::vector<Mat> r1_;              // dual residual per block
  std::vector<double> r1s_;
  std::vector<double> r2_;
  double r3_ = 0.0;
  std::vector<Mat> scaled_r1_;       // R^T r1 R per block
  Mat chol_m_;
  std::vector<double> y1_;           // M^{-1} (b + A q)
  std::vector<double> aq_;           // A H^{-1} c
  double ctq_ = 0.0;                 // c^T H^{-1} c
  double x1hx1_ = 0.0;               // for the tau-equation coefficient

  void setup_structure();
  bool nt_scaling(const Iterate& it);
  void residuals(const Iterate& it);
  bool build_schur();
  void solve_direction(const Iterate& it, double sigma, const Direction* affine, Direction& dir);
  double step_to_boundary(const Iterate& it, const Direction& dir) const;

  double inner_x_s(const Iterate& it) const {
    double v = it.tau * it.kappa;
    for (int k = 0; k < nb_; ++k) v += mat_inner(it.xb[k], it.sb[k]);
    for (int j = 0; j < cf_.n_scalars; ++j) v += it.xs[j] * it.ss[j];
    return v;
  }

  static double mat_inner(const Mat& a, const Mat& b) {
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    const size_t n = size_t(a.rows()) * a.cols();
    for (size_t i = 0; i < n; ++i) s += pa[i] * pb[i];
    return s;
  }

  double cx(const std::vector<Mat>& xb, const std::vector<double>& xs) const {
    double v = 0.0;
    for (int k = 0; k < nb_; ++k)
      if (cf_.c_blocks[k].dim() > 0) v += sym_inner(cf_.c_blocks[k], xb[k]);
    for (int j = 0; j < cf_.n_scalars; ++j) v += cf_.c_scalars[j] * xs[j];
    return v;
  }

  double by(const std::vector<double>& y) const {
    double v = 0.0;
    for (int l = 0; l < m_; ++l) v += cf_.rows[l].rhs * y[l];
    return v;
  }

  static double sym_inner(const SymMatrix& g, const Mat& x) {
    double s = 0.0;
    const int n = g.dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += g(i, j) * x(i, j);
    return s;
  }

  double row_dot_x(const CanonRow& row, const std::vector<Mat>& xb,
                   const std::vector<double>& xs) const {
    double v = 0.0;
    for (const auto& [b, g] : row.blocks) v += sym_inner(g, xb[b]);
    for (const auto& [s, w] : row.scalars) v += w * xs[s];
    return v;
  }
};

void Ipm::setup_structure() {
  cones_.resize(nb_);
  factors_.assign(m_, std::vector<std::vector<FactorRef>>(nb_));
  nu_deg_ = cf_.n_scalars;
  for (int k = 0; k < nb_; ++k) {
    cones_[k].n = cf_.block_dims[k];
    nu_deg_ += cf_.block_dims[k];
  }

  // Objective coefficient structure.
  for (int k = 0; k < nb_; ++k) {
    const SymMatrix& c = cf_.c_blocks[k];
    if (c.dim() == 0) {
      cones_[k].c_isotropic = true;
      cones_[k].c_iso = 0.0;
      continue;
    }
    const double diag0 = c(0, 0);
    bool iso = true;
    for (int i = 0; i < c.dim() && iso; ++i)
      for (int j = 0; j < c.dim() && iso; ++j)
        if (std::abs(c(i, j) - (i == j ? diag0 : 0.0)) > 1e-14 * std::max(1.0, std::abs(diag0)))
          iso = false;
    cones_[k].c_isotropic = iso;
    cones_[k].c_iso = iso ? diag0 : 0.0;
  }

  // Low-rank detection for row coefficients on moderately large blocks.
  for (int k = 0; k < nb_; ++k) {
    BlockCone& cone = cones_[k];
    if (cone.n < 16 || !cone.c_isotropic) continue;
    bool ok = true;
    std::vector<std::vector<std::pair<double, std::vector<double>>>> per_row(m_);
    for (int l = 0; l < m_ && ok; ++l) {
      auto itb = cf_.rows[l].blocks.find(k);
      if (itb == cf_.rows[l].blocks.end()) continue;
      Spectrum sp = eig_sym(itb->second);
      const double top = std::max(std::abs(sp.eigenvalues.front()), std::abs(sp.eigenvalues.back()));
      int rank = 0;
      for (int i = 0; i < cone.n; ++i)
        if (std::abs(sp.eigenvalues[i]) > 1e-12 * top) ++rank;
      if (rank > 4) {
        ok = false;
        break;
      }
      for (int i = 0; i < cone.n; ++i) {
        if (std::abs(sp.eigenvalues[i]) <= 1e-12 * top) continue;
        std::vector<double> q(cone.n);
        for (int r = 0; r < cone.n; ++r) q[r] = sp.eigenvectors(r, i);
        per_row[l].emplace_back(sp.eigenvalues[i], std::move(q));
      }
    }
    if (!ok) continue;
    cone.factored = true;
    for (int l = 0; l < m_; ++l) {
      for (auto& [w, q] : per_row[l]) {
        factors_[l][k].push_back({w, int(cone.pool.size())});
        cone.pool.push_back(std::move(q));
      }
    }
  }
}

namespace {

Mat matvec_col(const Mat& a, const std::vector<double>& v) {
  Mat out(a.rows(), 1);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    const double* row = a.data() + size_t(i) * a.cols();
    for (int j = 0; j < a.cols(); ++j) s += row[j] * v[j];
    out(i, 0) = s;
  }
  return out;
}

double col_dot_mat_col(const Mat& u, const Mat& z, const Mat& v) {
  // u^T Z v for column matrices u, v.
  const int n = z.rows();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    const double* zr = z.data() + size_t(i) * n;
    for (int j = 0; j < n; ++j) row += zr[j] * v(j, 0);
    s += u(i, 0) * row;
  }
  return s;
}

double col_dot(const Mat& u, const Mat& v) {
  double s = 0.0;
  for (int i = 0; i < u.rows(); ++i) s += u(i, 0) * v(i, 0);
  return s;
}

void axpy_outer(Mat& acc, double w, const Mat& q) {
  // acc += w q q^T for a column matrix q.
  const int n = acc.rows();
  for (int i = 0; i < n; ++i) {
    const double wi = w * q(i, 0);
    double* row = acc.data() + size_t(i) * n;
    for (int j = 0; j < n; ++j) row[j] += wi * q(j, 0);
  }
}

void add_sym(Mat& acc, const SymMatrix& g, double w) {
  const int n = g.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc(i, j) += w * g(i, j);
}

Mat congruence(const Mat& r, const Mat& z, bool transpose_first) {
  // transpose_first ? R^T Z R : R Z R^T
  if (transpose_first) return transpose(r) * z * r;
  return r * z * transpose(r);
}

}  // namespace

bool Ipm::nt_scaling(const Iterate& it) {
  for (int k = 0; k < nb_; ++k) {
    BlockCone& cone = cones_[k];
    const int n = cone.n;
    Mat lx, ls;
    if (!cholesky(it.xb[k], lx) || !cholesky(it.sb[k], ls)) return false;
    Mat b = transpose(ls) * lx;
    // B = U diag(lambda) V^T via the spectral decomposition of B^T B.
    Mat btb = transpose(b) * b;
    std::vector<double> ev;
    Mat v;
    if (!sym_eig(btb, ev, v)) return false;
    double top = 0.0;
    for (double e : ev) top = std::max(top, e);
    const double floor = std::max(top, 1e-300) * 1e-28;
    cone.lambda.assign(n, 0.0);
    for (int j = 0; j < n; ++j) cone.lambda[j] = std::sqrt(std::max(ev[j], floor));
    // R = L_x V diag(lambda^{-1/2}); R^{-1} = diag(lambda^{-1/2}) U^T L_s^T
    // with U = B V diag(1/lambda).
    Mat u = b * v;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) u(i, j) /= cone.lambda[j];
    cone.r = lx * v;
    Mat ut_lst = transpose(u) * transpose(ls);
    cone.r_inv = Mat(n, n);
    for (int j = 0; j < n; ++j) {
      const double rs = 1.0 / std::sqrt(cone.lambda[j]);
      for (int i = 0; i < n; ++i) {
        cone.r(i, j) *= rs;
        cone.r_inv(j, i) = ut_lst(j, i) * rs;
      }
    }
    cone.t = cone.r * transpose(cone.r);
    cone.rtr = transpose(cone.r) * cone.r;
    cone.tq.clear();
    cone.rq.clear();
    if (cone.factored) {
      cone.tq.reserve(cone.pool.size());
      cone.rq.reserve(cone.pool.size());
      Mat rt = transpose(cone.r);
      for (const auto& q : cone.pool) {
        cone.tq.push_back(matvec_col(cone.t, q));
        cone.rq.push_back(matvec_col(rt, q));
      }
    }
  }
  w_orth_.assign(cf_.n_scalars, 1.0);
  lam_orth_.assign(cf_.n_scalars, 1.0);
  for (int j = 0; j < cf_.n_scalars; ++j) {
    if (!(it.xs[j] > 0.0) || !(it.ss[j] > 0.0)) return false;
    w_orth_[j] = std::sqrt(it.xs[j] / it.ss[j]);
    lam_orth_[j] = std::sqrt(it.xs[j] * it.ss[j]);
  }
  scaled_r1_.assign(nb_, Mat());
  for (int k = 0; k < nb_; ++k)
    scaled_r1_[k] = congruence(cones_[k].r, r1_[k], /*transpose_first=*/true);
  return true;
}

void Ipm::residuals(const Iterate& it) {
  // r1 = A^T y + s - tau c (per block / scalar), r2 = A x - tau b,
  // r3 = c^T x - b^T y + kappa.
  r1_.assign(nb_, Mat());
  for (int k = 0; k < nb_; ++k) {
    const int n = cones_[k].n;
    Mat acc(n, n);
    for (int l = 0; l < m_; ++l) {
      auto itb = cf_.rows[l].blocks.find(k);
      if (itb == cf_.rows[l].blocks.end()) continue;
      add_sym(acc, itb->second, it.y[l]);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc(i, j) += it.sb[k](i, j);
    if (cf_.c_blocks[k].dim() > 0) add_sym(acc, cf_.c_blocks[k], -it.tau);
    r1_[k] = std::move(acc);
  }
  r1s_.assign(cf_.n_scalars, 0.0);
  for (int j = 0; j < cf_.n_scalars; ++j) r1s_[j] = it.ss[j] - it.tau * cf_.c_scalars[j];
  for (int l = 0; l < m_; ++l)
    for (const auto& [s, w] : cf_.rows[l].scalars) r1s_[s] += w * it.y[l];

  r2_.assign(m_, 0.0);
  for (int l = 0; l < m_; ++l)
    r2_[l] = row_dot_x(cf_.rows[l], it.xb, it.xs) - it.tau * cf_.rows[l].rhs;

  r3_ = cx(it.xb, it.xs) - by(it.y) + it.kappa;
}

bool Ipm::build_schur() {
  // M = A H^{-1} A^T plus the q = H^{-1} c pieces shared by every solve.
  Mat m_mat(m_, m_);
  aq_.assign(m_, 0.0);
  ctq_ = 0.0;

  for (int k = 0; k < nb_; ++k) {
    const BlockCone& cone = cones_[k];
    if (cone.factored) {
      // Gram of T-mapped pool vectors.
      const int f = int(cone.pool.size());
      Mat gram(f, f);
      for (int a = 0; a < f; ++a)
        for (int b = a; b < f; ++b) {
          double s = 0.0;
          for (int i = 0; i < cone.n; ++i) s += cone.pool[a][i] * cone.tq[b](i, 0);
          gram(a, b) = s;
          gram(b, a) = s;
        }
      for (int l = 0; l < m_; ++l) {
        if (factors_[l][k].empty()) continue;
        for (int l2 = l; l2 < m_; ++l2) {
          if (factors_[l2][k].empty()) continue;
          double s = 0.0;
          for (const auto& fa : factors_[l][k])
            for (const auto& fb : factors_[l2][k]) {
              const double g = gram(fa.pool_index, fb.pool_index);
              s += fa.w * fb.w * g * g;
            }
          m_mat(l, l2) += s;
          if (l2 != l) m_mat(l2, l) += s;
        }
        // A H^{-1} c with isotropic c: <E, c_iso T T> = c_iso sum_f w_f |T q_f|^2.
        if (cone.c_iso != 0.0) {
          double s = 0.0;
          for (const auto& fa : factors_[l][k])
            s += fa.w * col_dot(cone.tq[fa.pool_index], cone.tq[fa.pool_index]);
          aq_[l] += cone.c_iso * s;
        }
      }
      if (cone.c_iso != 0.0) {
        double tfrob = 0.0;
        for (int i = 0; i < cone.n; ++i)
          for (int j = 0; j < cone.n; ++j) tfrob += cone.t(i, j) * cone.t(i, j);
        ctq_ += cone.c_iso * cone.c_iso * tfrob;  // <c, H^{-1} c> = c_iso^2 ||T||_F^2
      }
    } else {
      // Dense path: H^{-1} G = T G T per row.
      std::vector<int> live;
      std::vector<Mat> himg;
      for (int l = 0; l < m_; ++l) {
        auto itb = cf_.rows[l].blocks.find(k);
        if (itb == cf_.rows[l].blocks.end()) continue;
        live.push_back(l);
        himg.push_back(cone.t * itb->second.as_mat() * cone.t);
      }
      for (size_t a = 0; a < live.size(); ++a) {
        const SymMatrix& ga = cf_.rows[live[a]].blocks.at(k);
        for (size_t b = a; b < live.size(); ++b) {
          const double s = sym_inner(ga, himg[b]);
          m_mat(live[a], live[b]) += s;
          if (a != b) m_mat(live[b], live[a]) += s;
        }
      }
      if (cf_.c_blocks[k].dim() > 0) {
        Mat hc = cone.t * cf_.c_blocks[k].as_mat() * cone.t;
        for (size_t a = 0; a < live.size(); ++a)
          aq_[live[a]] += sym_inner(cf_.rows[live[a]].blocks.at(k), hc);
        ctq_ += sym_inner(cf_.c_blocks[k], hc);
      }
    }
  }
  for (int l = 0; l < m_; ++l) {
    for (const auto& [s, w] : cf_.rows[l].scalars) {
      const double h = w_orth_[s] * w_orth_[s];
      for (int l2 = l; l2 < m_; ++l2) {
        auto it2 = cf_.rows[l2].scalars.find(s);
        if (it2 == cf_.rows[l2].scalars.end()) continue;
        m_mat(l, l2) += w * h * it2->second;
        if (l2 != l) m_mat(l2, l) += w * h * it2->second;
      }
      aq_[l] += w * h * cf_.c_scalars[s];
    }
  }
  for (int j = 0; j < cf_.n_scalars; ++j)
    ctq_ += cf_.c_scalars[j] * cf_.c_scalars[j] * w_orth_[j] * w_orth_[j];

  // Factor M with escalating jitter; rows can be numerically dependent.
  double jitter = 0.0;
  double max_diag = 1e-300;
  for (int l = 0; l < m_; ++l) max_diag = std::max(max_diag, m_mat(l, l));
  for (int attempt = 0; attempt < 4; ++attempt) {
    Mat try_m = m_mat;
    for (int l = 0; l < m_; ++l) try_m(l, l) += jitter;
    if (cholesky(try_m, chol_m_, 1e-300)) {
      // y1 = M^{-1}(b + A q)
      y1_.assign(m_, 0.0);
      for (int l = 0; l < m_; ++l) y1_[l] = cf_.rows[l].rhs + aq_[l];
      chol_solve(chol_m_, y1_);
      return true;
    }
    jitter = (jitter == 0.0) ? 1e-13 * max_diag : jitter * 1e3;
  }
  return false;
}

// Solves the Newton system for the given sigma (affine: sigma = 0 with the
// corrector term absent). Directions come back both unscaled and scaled.
void Ipm::solve_direction(const Iterate& it, double sigma, const Direction* affine,
                          Direction& dir) {
  const double mu = inner_x_s(it) / (nu_deg_ + 1.0);
  const double res_scale = -(1.0 - sigma);

  // Complementarity targets in scaled space.
  std::vector<Mat> d_block(nb_), sylv(nb_);
  for (int k = 0; k < nb_; ++k) {
    const int n = cones_[k].n;
    const auto& lam = cones_[k].lambda;
    Mat d(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = sigma * mu - lam[i] * lam[i];
    if (affine) {
      const Mat& ua = affine->u_hat[k];
      const Mat& va = affine->v_hat[k];
      Mat uv = ua * va;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) -= 0.5 * (uv(i, j) + uv(j, i));
    }
    Mat sy(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sy(i, j) = 2.0 * d(i, j) / (lam[i] + lam[j]);
    d_block[k] = std::move(d);
    sylv[k] = std::move(sy);
  }
  std::vector<double> d_orth(cf_.n_scalars), sylv_orth(cf_.n_scalars);
  for (int j = 0; j < cf_.n_scalars; ++j) {
    double d = sigma * mu - lam_orth_[j] * lam_orth_[j];
    if (affine) d -= (affine->dxs[j] / w_orth_[j]) * (affine->dss[j] * w_orth_[j]);
    d_orth[j] = d;
    sylv_orth[j] = d / lam_orth_[j];
  }
  double d_tau = sigma * mu - it.tau * it.kappa;
  if (affine) d_tau -= affine->dtau * affine->dkappa;

  // rhs0_l = b2_l + <A, H^{-1}(b1 - g)>  with b1 = res_scale * r1 and
  // g = W^{-1} sylv (so R^T g R = sylv and H^{-1} g = R sylv R^T ... probed
  // through inner products only).
  std::vector<double> rhs0(m_, 0.0);
  std::vector<Mat> hinv_b1g(nb_);  // only materialized on dense-path blocks
  double c_dot_u = 0.0;            // <c, H^{-1}(b1 - g)>
  for (int k = 0; k < nb_; ++k) {
    const BlockCone& cone = cones_[k];
    if (cone.factored) {
      for (int l = 0; l < m_; ++l) {
        if (factors_[l][k].empty()) continue;
        double s = 0.0;
        for (const auto& f : factors_[l][k]) {
          // <E, H^{-1} b1> = res_scale * tq^T r1 tq ; <E, H^{-1} g> = rq^T sylv rq
          s += f.w * (res_scale * col_dot_mat_col(cone.tq[f.pool_index], r1_[k],
                                                  cone.tq[f.pool_index]) -
                      col_dot_mat_col(cone.rq[f.pool_index], sylv[k], cone.rq[f.pool_index]));
        }
        rhs0[l] += s;
      }
      if (cone.c_iso != 0.0) {
        // <c, H^{-1} b1> = c_iso <T, b1 T> = c_iso res_scale <T r1 T, I>...
        // computed as c_iso * res_scale * <scaled_r1, RtR>? Use scaled space:
        // <c I, H^{-1} Z> = c <T Z T, I> = c <Z, T T>; instead express via
        // scaled forms: <c I, H^{-1} Z> = c tr(R^T Z R RtR-free...)  Simplest:
        // <cI, H^{-1}b1> = c res_scale tr(T r1 T) = c res_scale <r1, T T>.
        Mat tt = cone.t * cone.t;
        c_dot_u += cone.c_iso * (res_scale * mat_inner(r1_[k], tt));
        // <cI, H^{-1} g> = c tr(H^{-1} g) = c <R sylv R^T, I> = c <sylv, RtR>.
        c_dot_u -= cone.c_iso * mat_inner(sylv[k], cone.rtr);
      }
    } else {
      Mat b1g = r1_[k];
      // b1 - g = res_scale*r1 - R^{-T} sylv R^{-1}
      Mat g = congruence(transpose(cone.r_inv), sylv[k], /*transpose_first=*/false);
      const int n = cone.n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b1g(i, j) = res_scale * b1g(i, j) - g(i, j);
      Mat himg = cone.t * b1g * cone.t;
      hinv_b1g[k] = himg;
      for (int l = 0; l < m_; ++l) {
        auto itb = cf_.rows[l].blocks.find(k);
        if (itb == cf_.rows[l].blocks.end()) continue;
        rhs0[l] += sym_inner(itb->second, himg);
      }
      if (cf_.c_blocks[k].dim() > 0) c_dot_u += sym_inner(cf_.c_blocks[k], himg);
    }
  }
  for (int j = 0; j < cf_.n_scalars; ++j) {
    const double u = w_orth_[j] * w_orth_[j] * (res_scale * r1s_[j]) -
                     w_orth_[j] * sylv_orth[j];
    // H^{-1} b1 - W^{-1} (lambda \ d): orthant W^{-1} z = z / w.
    for (int l = 0; l < m_; ++l) {
      auto its = cf_.rows[l].scalars.find(j);
      if (its != cf_.rows[l].scalars.end()) rhs0[l] += its->second * u;
    }
    c_dot_u += cf_.c_scalars[j] * u;
  }
  for (int l = 0; l < m_; ++l) rhs0[l] += res_scale * r2_[l];

  std::vector<double> y0 = rhs0;
  if (m_ > 0) chol_solve(chol_m_, y0);

  // tau equation: coeff * dtau = rhs_tau.
  double aq_y0 = 0.0, aq_y1 = 0.0, b_y0 = 0.0, b_y1 = 0.0;
  for (int l = 0; l < m_; ++l) {
    aq_y0 += aq_[l] * y0[l];
    aq_y1 += aq_[l] * y1_[l];
    b_y0 += cf_.rows[l].rhs * y0[l];
    b_y1 += cf_.rows[l].rhs * y1_[l];
  }
  const double coeff = aq_y1 - ctq_ - b_y1 - it.kappa / it.tau;
  const double rhs_tau =
      res_scale * r3_ - d_tau / it.tau - aq_y0 + c_dot_u + b_y0;
  dir.dtau = rhs_tau / coeff;
  dir.dy.assign(m_, 0.0);
  for (int l = 0; l < m_; ++l) dir.dy[l] = y0[l] + dir.dtau * y1_[l];
  dir.dkappa = (d_tau - it.kappa * dir.dtau) / it.tau;

  // Block directions.
  dir.u_hat.assign(nb_, Mat());
  dir.v_hat.assign(nb_, Mat());
  dir.dxb.assign(nb_, Mat());
  dir.dsb.assign(nb_, Mat());
  for (int k = 0; k < nb_; ++k) {
    const BlockCone& cone = cones_[k];
    const int n = cone.n;
    // At^ dy materialized (rank-sum or dense accumulate).
    Mat aty(n, n);
    if (cone.factored) {
      // Outer products grouped by pool vector.
      std::vector<double> pool_w(cone.pool.size(), 0.0);
      for (int l = 0; l < m_; ++l)
        for (const auto& f : factors_[l][k]) pool_w[f.pool_index] += dir.dy[l] * f.w;
      Mat u_scaled(n, n);
      for (size_t pi = 0; pi < cone.pool.size(); ++pi) {
        if (pool_w[pi] == 0.0) continue;
        axpy_outer(u_scaled, pool_w[pi], cone.rq[pi]);
        Mat qcol(n, 1);
        for (int i = 0; i < n; ++i) qcol(i, 0) = cone.pool[pi][i];
        axpy_outer(aty, pool_w[pi], qcol);
      }
      // u_hat = R^T(A^T dy) R - dtau c_iso RtR - R^T b1 R + sylv.
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = u_scaled(i, j) + sylv[k](i, j) - res_scale * scaled_r1_[k](i, j);
          if (cone.c_iso != 0.0) v -= dir.dtau * cone.c_iso * cone.rtr(i, j);
          u_scaled(i, j) = v;
        }
      dir.u_hat[k] = std::move(u_scaled);
    } else {
      for (int l = 0; l < m_; ++l) {
        auto itb = cf_.rows[l].blocks.find(k);
        if (itb == cf_.rows[l].blocks.end()) continue;
        add_sym(aty, itb->second, dir.dy[l]);
      }
      Mat arg = aty;
      if (cf_.c_blocks[k].dim() > 0) add_sym(arg, cf_.c_blocks[k], -dir.dtau);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) arg(i, j) -= res_scale * r1_[k](i, j);
      Mat g = congruence(transpose(cone.r_inv), sylv[k], false);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) arg(i, j) += g(i, j);
      dir.u_hat[k] = congruence(cone.r, arg, /*transpose_first=*/true);
    }
    // v_hat = sylv - u_hat (NT-scaled complementarity).
    Mat vh(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) vh(i, j) = sylv[k](i, j) - dir.u_hat[k](i, j);
    dir.v_hat[k] = std::move(vh);
    // Unscaled: dX = R u_hat R^T; dS = b1 - A^T dy + c dtau.
    dir.dxb[k] = congruence(cone.r, dir.u_hat[k], /*transpose_first=*/false);
    Mat ds(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ds(i, j) = res_scale * r1_[k](i, j) - aty(i, j);
    if (cf_.c_blocks[k].dim() > 0) add_sym(ds, cf_.c_blocks[k], dir.dtau);
    dir.dsb[k] = std::move(ds);
    // Symmetrize against drift.
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double ux = 0.5 * (dir.dxb[k](i, j) + dir.dxb[k](j, i));
        dir.dxb[k](i, j) = ux;
        dir.dxb[k](j, i) = ux;
        const double us = 0.5 * (dir.dsb[k](i, j) + dir.dsb[k](j, i));
        dir.dsb[k](i, j) = us;
        dir.dsb[k](j, i) = us;
      }
  }
  dir.dxs.assign(cf_.n_scalars, 0.0);
  dir.dss.assign(cf_.n_scalars, 0.0);
  for (int j = 0; j < cf_.n_scalars; ++j) {
    double aty = 0.0;
    for (int l = 0; l < m_; ++l) {
      auto its = cf_.rows[l].scalars.find(j);
      if (its != cf_.rows[l].scalars.end()) aty += its->second * dir.dy[l];
    }
    const double b1 = res_scale * r1s_[j];
    // H^{-1}(A^T dy - c dtau - b1 + g) with H^{-1} = w^2, g = (lam \ d)/w.
    dir.dxs[j] = w_orth_[j] * w_orth_[j] * (aty - dir.dtau * cf_.c_scalars[j] - b1) +
                 w_orth_[j] * sylv_orth[j];
    dir.dss[j] = b1 - aty + dir.dtau * cf_.c_scalars[j];
  }
}

double Ipm::step_to_boundary(const Iterate& it, const Direction& dir) const {
  double alpha = kInf;
  for (int k = 0; k < nb_; ++k) {
    const BlockCone& cone = cones_[k];
    const int n = cone.n;
    for (const Mat* d : {&dir.u_hat[k], &dir.v_hat[k]}) {
      Mat w(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          w(i, j) = (*d)(i, j) / std::sqrt(cone.lambda[i] * cone.lambda[j]);
      const double min_eig = sym_min_eig(w);
      if (min_eig < 0.0) alpha = std::min(alpha, -1.0 / min_eig);
    }
  }
  for (int j = 0; j < cf_.n_scalars; ++j) {
    const double du = dir.dxs[j] / w_orth_[j];   // scaled primal coordinate
    const double dv = dir.dss[j] * w_orth_[j];   // scaled dual coordinate
    if (du < 0.0) alpha = std::min(alpha, -lam_orth_[j] / du);
    if (dv < 0.0) alpha = std::min(alpha, -lam_orth_[j] / dv);
  }
  if (dir.dtau < 0.0) alpha = std::min(alpha, -it.tau / dir.dtau);
  if (dir.dkappa < 0.0) alpha = std::min(alpha, -it.kappa / dir.dkappa);
  return alpha;
}

SolveStatus Ipm::run(Iterate& it, int& iters) {
  // Start at the cone identity.
  it.xb.clear();
  it.sb.clear();
  for (int k = 0; k < nb_; ++k) {
    it.xb.push_back(Mat::identity(cones_[k].n));
    it.sb.push_back(Mat::identity(cones_[k].n));
  }
  it.xs.assign(cf_.n_scalars, 1.0);
  it.ss.assign(cf_.n_scalars, 1.0);
  it.y.assign(m_, 0.0);
  it.tau = 1.0;
  it.kappa = 1.0;

  double bnorm = 0.0, cnorm = 0.0;
  for (const auto& row : cf_.rows) bnorm += row.rhs * row.rhs;
  bnorm = std::sqrt(bnorm);
  for (const auto& g : cf_.c_blocks) cnorm += frob(g) * frob(g);
  for (double w : cf_.c_scalars) cnorm += w * w;
  cnorm = std::sqrt(cnorm);

  for (iters = 0; iters < opts_.max_iter; ++iters) {
    residuals(it);

    // Convergence bookkeeping at the de-homogenized point.
    const double pcost = cx(it.xb, it.xs) / it.tau;
    const double dcost = by(it.y) / it.tau;
    double gap = (inner_x_s(it) - it.tau * it.kappa) / (it.tau * it.tau);
    double pres = 0.0;
    for (int l = 0; l < m_; ++l) pres += r2_[l] * r2_[l];
    pres = std::sqrt(pres) / it.tau / std::max(1.0, bnorm);
    double dres = 0.0;
    for (int k = 0; k < nb_; ++k) dres += mat_inner(r1_[k], r1_[k]);
    for (int j = 0; j < cf_.n_scalars; ++j) dres += r1s_[j] * r1s_[j];
    dres = std::sqrt(dres) / it.tau / std::max(1.0, cnorm);
    const double relgap = gap / std::max(1.0, std::abs(pcost));

    if (opts_.verbose)
      std::fprintf(stderr,
                   "iter %3d  pcost % .6e  dcost % .6e  gap %.3e  pres %.3e  dres %.3e  tau %.3e\n",
                   iters, pcost, dcost, relgap, pres, dres, it.tau);

    if (pres <= opts_.tol_feas * 10.0 && dres <= opts_.tol_feas * 10.0 &&
        (relgap <= opts_.tol_gap || gap <= opts_.tol_gap * opts_.tol_gap))
      return SolveStatus::Optimal;

    // Certificates of infeasibility / unboundedness.
    const double bty = by(it.y);
    if (bty > 0.0) {
      double hres = 0.0;
      for (int k = 0; k < nb_; ++k) {
        Mat aty(cones_[k].n, cones_[k].n);
        for (int l = 0; l < m_; ++l) {
          auto itb = cf_.rows[l].blocks.find(k);
          if (itb != cf_.rows[l].blocks.end()) add_sym(aty, itb->second, it.y[l]);
        }
        for (int i = 0; i < cones_[k].n; ++i)
          for (int j = 0; j < cones_[k].n; ++j) {
            const double v = aty(i, j) + it.sb[k](i, j);
            hres += v * v;
          }
      }
      for (int j = 0; j < cf_.n_scalars; ++j) {
        double aty = 0.0;
        for (int l = 0; l < m_; ++l) {
          auto its = cf_.rows[l].scalars.find(j);
          if (its != cf_.rows[l].scalars.end()) aty += its->second * it.y[l];
        }
        const double v = aty + it.ss[j];
        hres += v * v;
      }
      if (std::sqrt(hres) <= opts_.tol_feas * std::max(1.0, cnorm) * bty)
        return SolveStatus::Infeasible;
    }
    const double ctx = cx(it.xb, it.xs);
    if (ctx < 0.0) {
      double ax = 0.0;
      for (int l = 0; l < m_; ++l) {
        const double v = row_dot_x(cf_.rows[l], it.xb, it.xs);
        ax += v * v;
      }
      if (std::sqrt(ax) <= opts_.tol_feas * std::max(1.0, bnorm) * (-ctx))
        return SolveStatus::Unbounded;
    }
    if (it.tau < 1e-10 * std::max(1.0, it.kappa)) return SolveStatus::NumericalError;

    if (!nt_scaling(it)) return SolveStatus::NumericalError;
    if (!build_schur()) return SolveStatus::NumericalError;

    const double mu = inner_x_s(it) / (nu_deg_ + 1.0);

    Direction aff;
    solve_direction(it, 0.0, nullptr, aff);
    double alpha_aff = std::min(1.0, step_to_boundary(it, aff));

    // Mehrotra centering weight from the affine trial point.
    double ip = inner_x_s(it);
    double cross = 0.0, quad = 0.0;
    for (int k = 0; k < nb_; ++k) {
      const auto& lam = cones_[k].lambda;
      for (int i = 0; i < cones_[k].n; ++i) {
        cross += lam[i] * (aff.u_hat[k](i, i) + aff.v_hat[k](i, i));
      }
      quad += mat_inner(aff.u_hat[k], aff.v_hat[k]);
    }
    for (int j = 0; j < cf_.n_scalars; ++j) {
      const double du = aff.dxs[j] / w_orth_[j];
      const double dv = aff.dss[j] * w_orth_[j];
      cross += lam_orth_[j] * (du + dv);
      quad += du * dv;
    }
    cross += it.tau * aff.dkappa + it.kappa * aff.dtau;
    quad += aff.dtau * aff.dkappa;
    const double mu_aff =
        (ip + alpha_aff * cross + alpha_aff * alpha_aff * quad) / (nu_deg_ + 1.0);
    double sigma = std::pow(std::max(0.0, std::min(1.0, mu_aff / mu)), 3.0);

    Direction dir;
    solve_direction(it, sigma, &aff, dir);
    double alpha = 0.99 * step_to_boundary(it, dir);
    alpha = std::min(alpha, 1.0);
    if (!(alpha > 1e-14)) return SolveStatus::NumericalError;

    for (int k = 0; k < nb_; ++k) {
      const int n = cones_[k].n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          it.xb[k](i, j) += alpha * dir.dxb[k](i, j);
          it.sb[k](i, j) += alpha * dir.dsb[k](i, j);
        }
    }
    for (int j = 0; j < cf_.n_scalars; ++j) {
      it.xs[j] += alpha * dir.dxs[j];
      it.ss[j] += alpha * dir.dss[j];
    }
    for (int l = 0; l < m_; ++l) it.y[l] += alpha * dir.dy[l];
    it.tau += alpha * dir.dtau;
    it.kappa += alpha * dir.dkappa;

    for (double v : it.xs)
      if (!std::isfinite(v)) return SolveStatus::NumericalError;
    if (!std::isfinite(it.tau) || !std::isfinite(it.kappa)) return SolveStatus::NumericalError;
  }
  return SolveStatus::MaxIterations;
}

}  // namespace

// ---------------------------------------------------------------------------
// solve() wrapper: canonicalize, equilibrate, run, unscale
// ---------------------------------------------------------------------------

Solution solve(const Problem& p, const SolveOptions& opts) {
  p.validate();
  CanonForm cf = canonicalize(p);
  const Scaling sc = equilibrate(cf);

  Ipm ipm(cf, opts);
  Iterate it;
  int iters = 0;
  SolveStatus status = ipm.run(it, iters);

  Solution sol;
  sol.status = status;
  sol.iterations = iters;

  const int nb_decl = cf.n_declared_blocks;
  sol.block_values.reserve(nb_decl);
  const bool point_valid =
      status == SolveStatus::Optimal || status == SolveStatus::MaxIterations;
  const double tau = point_valid ? it.tau : 1.0;
  for (int k = 0; k < nb_decl; ++k) {
    const int n = cf.block_dims[k];
    Mat x = it.xb.empty() ? Mat::identity(n) : it.xb[k];
    SymMatrix val(x);
    // Undo homogenization and scaling: x = d_k * xhat / (s_b * tau).
    sol.block_values.push_back(val.scaled(sc.d_block[k] / (sc.s_b * tau)));
  }
  sol.scalar_values.assign(cf.n_declared_scalars, 0.0);
  for (int j = 0; j < cf.n_declared_scalars; ++j)
    sol.scalar_values[j] = it.xs.empty() ? 0.0 : sc.d_scalar[j] * it.xs[j] / (sc.s_b * tau);
  sol.eq_duals.assign(cf.rows.size(), 0.0);
  for (size_t l = 0; l < cf.rows.size(); ++l)
    sol.eq_duals[l] = it.y.empty() ? 0.0 : sc.e_row[l] * it.y[l] / (sc.s_c * tau);

  sol.objective = p.eval(p.objective, sol.block_values, sol.scalar_values);
  // Dual objective b^T y on original data plus the objective constant.
  double dobj = 0.0;
  {
    // Reconstruct original rhs: rows were scaled by e_row then s_b.
    size_t l = 0;
    CanonForm orig = canonicalize(p);
    for (; l < orig.rows.size(); ++l) dobj += orig.rows[l].rhs * sol.eq_duals[l];
  }
  sol.dual_objective = dobj + cf.obj_constant;

  // Residuals on the original data.
  KktReport rep = check_kkt(p, sol);
  sol.kkt.primal_residual = std::max(rep.max_equality_violation, rep.max_inequality_violation);
  sol.kkt.primal_residual = std::max(sol.kkt.primal_residual,
                                     std::max(0.0, -rep.min_lmi_eigenvalue));
  sol.kkt.dual_residual = rep.dual_residual;
  sol.kkt.duality_gap = rep.duality_gap;
  return sol;
}

// ---------------------------------------------------------------------------
// check_kkt: everything recomputed from the original problem
// ---------------------------------------------------------------------------

KktReport check_kkt(const Problem& p, const Solution& s) {
  KktReport rep;
  CanonForm cf = canonicalize(p);

  double data_max = 0.0;
  for (const auto& row : cf.rows) {
    for (const auto& [b, g] : row.blocks) data_max = std::max(data_max, frob(g));
    for (const auto& [sj, w] : row.scalars) data_max = std::max(data_max, std::abs(w));
    data_max = std::max(data_max, std::abs(row.rhs));
  }
  for (const auto& g : cf.c_blocks) data_max = std::max(data_max, frob(g));
  for (double w : cf.c_scalars) data_max = std::max(data_max, std::abs(w));
  rep.data_scale = 1.0 + data_max;

  // Primal feasibility.
  for (const auto& lc : p.linear_constraints) {
    const double v = p.eval(lc.expr, s.block_values, s.scalar_values);
    if (lc.sense == Sense::Equal)
      rep.max_equality_violation = std::max(rep.max_equality_violation, std::abs(v));
    else if (lc.sense == Sense::LessEqual)
      rep.max_inequality_violation = std::max(rep.max_inequality_violation, std::max(0.0, v));
    else
      rep.max_inequality_violation = std::max(rep.max_inequality_violation, std::max(0.0, -v));
  }
  for (const auto& lmi : p.lmi_constraints) {
    Mat val(lmi.dim, lmi.dim);
    for (int i = 0; i < lmi.dim; ++i)
      for (int j = i; j < lmi.dim; ++j) {
        const double v = p.eval(lmi.entry(i, j), s.block_values, s.scalar_values);
        val(i, j) = v;
        val(j, i) = v;
      }
    Spectrum sp = eig_sym(SymMatrix(val));
    rep.min_lmi_eigenvalue = std::min(rep.min_lmi_eigenvalue, sp.eigenvalues.back());
  }
  for (const auto& x : s.block_values) {
    Spectrum sp = eig_sym(x);
    rep.min_block_eigenvalue = std::min(rep.min_block_eigenvalue, sp.eigenvalues.back());
  }
  for (double v : s.scalar_values) rep.min_scalar = std::min(rep.min_scalar, v);

  // Dual feasibility from the canonical multipliers: c - A^T y in K.
  if (s.eq_duals.size() == cf.rows.size()) {
    for (size_t k = 0; k < cf.block_dims.size(); ++k) {
      Mat acc(cf.block_dims[k], cf.block_dims[k]);
      if (cf.c_blocks[k].dim() > 0) add_sym(acc, cf.c_blocks[k], 1.0);
      for (size_t l = 0; l < cf.rows.size(); ++l) {
        auto itb = cf.rows[l].blocks.find(int(k));
        if (itb != cf.rows[l].blocks.end()) add_sym(acc, itb->second, -s.eq_duals[l]);
      }
      Spectrum sp = eig_sym(SymMatrix(acc));
      rep.dual_residual = std::max(rep.dual_residual, std::max(0.0, -sp.eigenvalues.back()));
    }
    for (int j = 0; j < cf.n_scalars; ++j) {
      double acc = cf.c_scalars[j];
      for (size_t l = 0; l < cf.rows.size(); ++l) {
        auto its = cf.rows[l].scalars.find(j);
        if (its != cf.rows[l].scalars.end()) acc -= its->second * s.eq_duals[l];
      }
      rep.dual_residual = std::max(rep.dual_residual, std::max(0.0, -acc));
    }
  }

  rep.duality_gap = s.objective - s.dual_objective;

  const double feas_scale = 1e-7 * rep.data_scale;
  rep.ok = rep.max_equality_violation <= feas_scale &&
           rep.max_inequality_violation <= feas_scale &&
           rep.min_lmi_eigenvalue >= -feas_scale && rep.min_block_eigenvalue >= -1e-8 &&
           rep.min_scalar >= -1e-8 &&
           std::abs(rep.duality_gap) <= 1e-6 * (1.0 + std::abs(s.objective));
  if (!rep.ok) rep.detail = "kkt residuals exceed tolerances";
  return rep;
}

}  // namespace rrbeam::conic
