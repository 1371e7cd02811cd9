#include "rrbeam/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rrbeam {

double Vec2::norm() const { return std::hypot(x, y); }

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat operator*(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.data() + size_t(i) * m;
    const double* ai = a.data() + size_t(i) * k;
    for (int l = 0; l < k; ++l) {
      const double ail = ai[l];
      if (ail == 0.0) continue;
      const double* bl = b.data() + size_t(l) * m;
      for (int j = 0; j < m; ++j) ci[j] += ail * bl[j];
    }
  }
  return c;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

SymMatrix::SymMatrix(const Mat& m) : n_(m.rows()), a_(size_t(m.rows()) * m.rows(), 0.0) {
  if (m.rows() != m.cols()) throw InvalidInput("SymMatrix: matrix not square");
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) a_[size_t(i) * n_ + j] = 0.5 * (m(i, j) + m(j, i));
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) m.a_[size_t(i) * n + i] = 1.0;
  return m;
}

SymMatrix SymMatrix::diag(const std::vector<double>& d) {
  SymMatrix m(int(d.size()));
  for (int i = 0; i < m.n_; ++i) m.a_[size_t(i) * m.n_ + i] = d[i];
  return m;
}

SymMatrix SymMatrix::outer(const std::vector<double>& v, double w) {
  SymMatrix m(int(v.size()));
  for (int i = 0; i < m.n_; ++i)
    for (int j = 0; j < m.n_; ++j) m.a_[size_t(i) * m.n_ + j] = w * v[i] * v[j];
  return m;
}

SymMatrix SymMatrix::outer(Vec2 v, double w) { return outer(std::vector<double>{v.x, v.y}, w); }

void SymMatrix::set(int i, int j, double v) {
  a_[size_t(i) * n_ + j] = v;
  a_[size_t(j) * n_ + i] = v;
}

const Mat SymMatrix::as_mat() const {
  Mat m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

double SymMatrix::quad_form(const std::vector<double>& v) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    double row = 0.0;
    for (int j = 0; j < n_; ++j) row += (*this)(i, j) * v[j];
    s += v[i] * row;
  }
  return s;
}

double SymMatrix::quad_form(Vec2 v) const { return quad_form(std::vector<double>{v.x, v.y}); }

std::vector<double> SymMatrix::mul(const std::vector<double>& v) const {
  std::vector<double> r(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) r[i] += (*this)(i, j) * v[j];
  return r;
}

Vec2 SymMatrix::mul(Vec2 v) const {
  auto r = mul(std::vector<double>{v.x, v.y});
  return {r[0], r[1]};
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  SymMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] + o.a_[i];
  return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  SymMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] - o.a_[i];
  return r;
}

SymMatrix SymMatrix::scaled(double s) const {
  SymMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = s * a_[i];
  return r;
}

double inner(const SymMatrix& a, const SymMatrix& b) {
  double s = 0.0;
  const int n = a.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += a(i, j) * b(i, j);
  return s;
}

SymMatrix sandwich(const SymMatrix& a, const SymMatrix& b) {
  return SymMatrix(a.as_mat() * b.as_mat() * a.as_mat());
}

HermMatrix HermMatrix::identity(int n) {
  HermMatrix m(n);
  for (int i = 0; i < n; ++i) m.a_[size_t(i) * n + i] = cplx(1.0, 0.0);
  return m;
}

HermMatrix HermMatrix::outer(const std::vector<cplx>& v, double w) {
  HermMatrix m(int(v.size()));
  const int n = m.n_;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.a_[size_t(i) * n + j] = w * v[i] * std::conj(v[j]);
  for (int i = 0; i < n; ++i) m.a_[size_t(i) * n + i].imag(0.0);
  return m;
}

void HermMatrix::set(int i, int j, cplx v) {
  if (i == j) v.imag(0.0);
  a_[size_t(i) * n_ + j] = v;
  a_[size_t(j) * n_ + i] = std::conj(v);
}

double HermMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, i).real();
  return t;
}

double HermMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const cplx& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

HermMatrix HermMatrix::operator+(const HermMatrix& o) const {
  HermMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] + o.a_[i];
  return r;
}

HermMatrix HermMatrix::operator-(const HermMatrix& o) const {
  HermMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] - o.a_[i];
  return r;
}

HermMatrix HermMatrix::scaled(double s) const {
  HermMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = s * a_[i];
  return r;
}

namespace {

void check_finite(const SymMatrix& m) {
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j)
      if (!std::isfinite(m(i, j))) throw InvalidInput("eig_sym: non-finite entry");
}

void check_finite(const HermMatrix& m) {
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) {
      cplx v = m(i, j);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw InvalidInput("eig_sym: non-finite entry");
    }
}

// Sorts eigenpairs descending by eigenvalue.
template <typename ReorderCols>
void sort_descending(std::vector<double>& vals, ReorderCols reorder) {
  std::vector<int> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return vals[a] > vals[b]; });
  std::vector<double> sorted(vals.size());
  for (size_t k = 0; k < order.size(); ++k) sorted[k] = vals[order[k]];
  vals = sorted;
  reorder(order);
}

Spectrum eig_sym_2x2(const SymMatrix& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 1);
  const double mid = 0.5 * (a + c);
  const double d = std::hypot(0.5 * (a - c), b);
  Spectrum sp;
  sp.eigenvalues = {mid + d, mid - d};
  sp.eigenvectors = Mat(2, 2);
  if (d == 0.0 || (b == 0.0 && a >= c)) {
    sp.eigenvectors = Mat::identity(2);
  } else if (b == 0.0) {
    sp.eigenvectors(0, 0) = 0.0;
    sp.eigenvectors(1, 0) = 1.0;
    sp.eigenvectors(0, 1) = 1.0;
    sp.eigenvectors(1, 1) = 0.0;
  } else {
    // Pick the better-conditioned null-space formula for v1.
    const double l1 = sp.eigenvalues[0];
    double vx, vy;
    if (std::abs(l1 - a) > std::abs(l1 - c)) {
      vx = b;
      vy = l1 - a;
    } else {
      vx = l1 - c;
      vy = b;
    }
    const double nrm = std::hypot(vx, vy);
    vx /= nrm;
    vy /= nrm;
    sp.eigenvectors(0, 0) = vx;
    sp.eigenvectors(1, 0) = vy;
    sp.eigenvectors(0, 1) = -vy;
    sp.eigenvectors(1, 1) = vx;
  }
  return sp;
}

}  // namespace

Spectrum eig_sym(const SymMatrix& m) {
  check_finite(m);
  const int n = m.dim();
  if (n < 1) throw InvalidInput("eig_sym: empty matrix");
  if (n == 1) return {{m(0, 0)}, Mat::identity(1)};
  if (n == 2) return eig_sym_2x2(m);

  Mat a = m.as_mat();
  Mat v = Mat::identity(n);
  const double scale = m.frobenius_norm();
  const double tol = 1e-15 * (scale > 0.0 ? scale : 1.0);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= tol) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol / n) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  Spectrum sp;
  sp.eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) sp.eigenvalues[i] = a(i, i);
  sp.eigenvectors = Mat(n, n);
  sort_descending(sp.eigenvalues, [&](const std::vector<int>& order) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) sp.eigenvectors(i, j) = v(i, order[j]);
  });
  return sp;
}

HermSpectrum eig_sym(const HermMatrix& m) {
  check_finite(m);
  const int n = m.dim();
  if (n < 1) throw InvalidInput("eig_sym: empty matrix");

  std::vector<cplx> a(size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[size_t(i) * n + j] = m(i, j);
  std::vector<cplx> v(size_t(n) * n, cplx(0.0, 0.0));
  for (int i = 0; i < n; ++i) v[size_t(i) * n + i] = cplx(1.0, 0.0);

  auto A = [&](int i, int j) -> cplx& { return a[size_t(i) * n + j]; };
  auto V = [&](int i, int j) -> cplx& { return v[size_t(i) * n + j]; };

  const double scale = m.frobenius_norm();
  const double tol = 1e-15 * (scale > 0.0 ? scale : 1.0);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(A(p, q));
    if (std::sqrt(2.0 * off) <= tol) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cplx apq = A(p, q);
        const double r = std::abs(apq);
        if (r <= tol / n) continue;
        const cplx phase = apq / r;  // e^{i phi}
        const double theta = (A(q, q).real() - A(p, p).real()) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const cplx sp = s * phase;              // s e^{i phi}
        const cplx spc = s * std::conj(phase);  // s e^{-i phi}

        const double app = A(p, p).real(), aqq = A(q, q).real();
        A(p, p) = cplx(app - t * r, 0.0);
        A(q, q) = cplx(aqq + t * r, 0.0);
        A(p, q) = cplx(0.0, 0.0);
        A(q, p) = cplx(0.0, 0.0);
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const cplx akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - spc * akq;
          A(p, k) = std::conj(A(k, p));
          A(k, q) = sp * akp + c * akq;
          A(q, k) = std::conj(A(k, q));
        }
        for (int k = 0; k < n; ++k) {
          const cplx vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - spc * vkq;
          V(k, q) = sp * vkp + c * vkq;
        }
      }
    }
  }

  HermSpectrum sp;
  sp.eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) sp.eigenvalues[i] = A(i, i).real();
  sp.eigenvectors.assign(n, std::vector<cplx>(n));
  sort_descending(sp.eigenvalues, [&](const std::vector<int>& order) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) sp.eigenvectors[j][i] = V(i, order[j]);
  });
  return sp;
}

namespace {

SymMatrix spd_spectral_power(const SymMatrix& m, double exponent, const char* who) {
  Spectrum sp = eig_sym(m);
  const double tol_pd = 1e-12 * m.trace();
  const double min_eig = sp.eigenvalues.back();
  if (!(min_eig > tol_pd))
    throw SingularMatrix(std::string(who) + ": matrix not positive definite (min eig " +
                         std::to_string(min_eig) + ")");
  const int n = m.dim();
  Mat scaled(n, n);
  for (int j = 0; j < n; ++j) {
    const double f = std::pow(sp.eigenvalues[j], exponent);
    for (int i = 0; i < n; ++i) scaled(i, j) = sp.eigenvectors(i, j) * f;
  }
  return SymMatrix(scaled * transpose(sp.eigenvectors));
}

}  // namespace

SymMatrix spd_inv_sqrt(const SymMatrix& m) { return spd_spectral_power(m, -0.5, "spd_inv_sqrt"); }

SymMatrix spd_inverse(const SymMatrix& m) { return spd_spectral_power(m, -1.0, "spd_inverse"); }

SymMatrix real_embed(const HermMatrix& h) {
  const int n = h.dim();
  SymMatrix e(2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const cplx v = h(i, j);
      e.set(i, j, v.real());
      e.set(n + i, n + j, v.real());
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double im = h(i, j).imag();
      e.set(n + i, j, im);  // also writes (j, n+i) = im = -Im(j,i)
    }
  return e;
}

HermMatrix embed_restrict(const SymMatrix& x) {
  if (x.dim() % 2 != 0) throw InvalidInput("embed_restrict: odd dimension");
  const int n = x.dim() / 2;
  HermMatrix h(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double re = 0.5 * (x(i, j) + x(n + i, n + j));
      const double im = 0.5 * (x(n + i, j) - x(i, n + j));
      h.set(i, j, cplx(re, im));
    }
  return h;
}

double lambda_plus(const SymMatrix& s) {
  Spectrum sp = eig_sym(s);
  return std::max(sp.eigenvalues.front(), 0.0);
}

}  // namespace rrbeam
