#pragma once

// Dense symmetric/Hermitian matrix kernel: spectral decompositions, SPD
// inverse square root, complex-to-real embedding and the positive-part
// maximum eigenvalue. Everything here is a pure function on value types.

#include <complex>
#include <vector>

#include "rrbeam/errors.hpp"

namespace rrbeam {

using cplx = std::complex<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const;
  double norm_sq() const { return x * x + y * y; }
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// General dense real matrix, row-major. Plumbing for the FIM assembly path
// and the eigensolvers; not part of the module contract.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(size_t(rows) * cols, 0.0) {}

  static Mat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[size_t(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[size_t(i) * cols_ + j]; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

Mat operator*(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);

// Real symmetric matrix; (M + M^T)/2 is stored so entries (i,j) and (j,i)
// are bitwise equal even when built from asymmetric intermediates.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(size_t(n) * n, 0.0) {}
  explicit SymMatrix(const Mat& m);  // symmetrizes, requires square

  static SymMatrix identity(int n);
  static SymMatrix diag(const std::vector<double>& d);
  // v v^T scaled by w.
  static SymMatrix outer(const std::vector<double>& v, double w = 1.0);
  static SymMatrix outer(Vec2 v, double w = 1.0);

  int dim() const { return n_; }
  double operator()(int i, int j) const { return a_[size_t(i) * n_ + j]; }
  void set(int i, int j, double v);  // sets (i,j) and (j,i)
  const Mat as_mat() const;

  double trace() const;
  double frobenius_norm() const;
  double quad_form(const std::vector<double>& v) const;  // v^T M v
  double quad_form(Vec2 v) const;
  std::vector<double> mul(const std::vector<double>& v) const;
  Vec2 mul(Vec2 v) const;

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix scaled(double s) const;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// <A, B> = tr(A B) for symmetric A, B.
double inner(const SymMatrix& a, const SymMatrix& b);
// A * B * A for symmetric A, B (result symmetric).
SymMatrix sandwich(const SymMatrix& a, const SymMatrix& b);

// Complex Hermitian matrix; (M + M^H)/2 stored, diagonal imaginary parts
// forced to exactly zero.
class HermMatrix {
 public:
  HermMatrix() = default;
  explicit HermMatrix(int n) : n_(n), a_(size_t(n) * n, cplx(0.0, 0.0)) {}

  static HermMatrix identity(int n);
  // v v^H scaled by w.
  static HermMatrix outer(const std::vector<cplx>& v, double w = 1.0);

  int dim() const { return n_; }
  cplx operator()(int i, int j) const { return a_[size_t(i) * n_ + j]; }
  void set(int i, int j, cplx v);  // sets (i,j) and conj at (j,i)

  double trace() const;  // real by Hermitian structure
  double frobenius_norm() const;
  HermMatrix operator+(const HermMatrix& o) const;
  HermMatrix operator-(const HermMatrix& o) const;
  HermMatrix scaled(double s) const;

 private:
  int n_ = 0;
  std::vector<cplx> a_;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // descending
  Mat eigenvectors;                 // orthonormal columns, same order
};

struct HermSpectrum {
  std::vector<double> eigenvalues;        // real, descending
  std::vector<std::vector<cplx>> eigenvectors;  // orthonormal columns
};

// Spectral decomposition of a symmetric matrix. 2x2 closed form, cyclic
// Jacobi otherwise. Throws InvalidInput on non-finite entries.
Spectrum eig_sym(const SymMatrix& m);
// Hermitian analogue (complex Jacobi rotations).
HermSpectrum eig_sym(const HermMatrix& m);

// R with R M R = I for symmetric positive definite M; R symmetric PD.
// Throws SingularMatrix when min eigenvalue <= 1e-12 * trace.
SymMatrix spd_inv_sqrt(const SymMatrix& m);

// M^{-1} for symmetric PD M via the spectral decomposition; same PD
// tolerance as spd_inv_sqrt.
SymMatrix spd_inverse(const SymMatrix& m);

// [[Re H, -Im H], [Im H, Re H]]: hosts a Hermitian variable in a real
// symmetric cone. Each eigenvalue of H appears twice; traces double.
SymMatrix real_embed(const HermMatrix& h);

// Recovers the Hermitian matrix from a (numerically) embedded 2N x 2N
// block, averaging over the embedding symmetry.
HermMatrix embed_restrict(const SymMatrix& x);

// max(lambda_max(S), 0).
double lambda_plus(const SymMatrix& s);

}  // namespace rrbeam
