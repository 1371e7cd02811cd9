#pragma once

// Canonical semidefinite-program representation and a small-scale dense
// primal-dual interior-point solve layer (Nesterov-Todd scaling, Mehrotra
// correction, homogeneous self-dual embedding for infeasibility
// certificates), with a pluggable external-solver adapter that talks the
// serialized canonical form.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rrbeam/matkit.hpp"

namespace rrbeam::conic {

// Affine functional over the problem variables:
//   value = sum_b <G_b, X_b> + sum_j w_j t_j + constant.
struct LinExpr {
  std::map<int, SymMatrix> block_coeffs;
  std::map<int, double> scalar_coeffs;
  double constant = 0.0;

  // Adds <g, X_block>.
  LinExpr& add_block(int block, const SymMatrix& g);
  // Adds w * t_scalar.
  LinExpr& add_scalar(int scalar, double w);
  LinExpr& add_constant(double v);
  LinExpr& add(const LinExpr& other, double w = 1.0);
};

enum class Sense { LessEqual, GreaterEqual, Equal };

struct LinearConstraint {
  LinExpr expr;  // expr SENSE 0
  Sense sense = Sense::LessEqual;
  std::string name;
};

// Symmetric matrix of affine entries, constrained PSD. Entries stored for
// the upper triangle, row-major: (0,0), (0,1), ..., (1,1), ...
struct LmiConstraint {
  int dim = 0;
  std::vector<LinExpr> entries;
  std::string name;

  LinExpr& entry(int i, int j);
  const LinExpr& entry(int i, int j) const;
};

struct Problem {
  std::vector<std::pair<std::string, int>> psd_blocks;  // (name, dim)
  std::vector<std::string> nonneg_scalars;
  LinExpr objective;  // minimized
  std::vector<LinearConstraint> linear_constraints;
  std::vector<LmiConstraint> lmi_constraints;

  int add_psd_block(const std::string& name, int dim);
  int add_nonneg_scalar(const std::string& name);
  LmiConstraint& add_lmi(const std::string& name, int dim);
  void add_linear(const std::string& name, LinExpr expr, Sense sense);

  double eval(const LinExpr& e, const std::vector<SymMatrix>& blocks,
              const std::vector<double>& scalars) const;
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations, NumericalError };

std::string to_string(SolveStatus s);

struct KktResiduals {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalError;
  std::vector<SymMatrix> block_values;
  std::vector<double> scalar_values;
  // Multipliers for the canonicalized equality rows (deterministic order:
  // linear constraints first, then LMI upper-triangle entries).
  std::vector<double> eq_duals;
  double objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  KktResiduals kkt;
};

struct SolveOptions {
  double tol_gap = 1e-7;
  double tol_feas = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

// Embedded dense interior-point solve. Deterministic for identical inputs.
Solution solve(const Problem& p, const SolveOptions& opts = {});

struct KktReport {
  double max_equality_violation = 0.0;
  double max_inequality_violation = 0.0;
  double min_lmi_eigenvalue = 0.0;    // most negative LMI eigenvalue (0 if none)
  double min_block_eigenvalue = 0.0;  // most negative PSD-block eigenvalue
  double min_scalar = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  double data_scale = 0.0;  // 1 + max data magnitude, for relative checks
  bool ok = false;
  std::string detail;
};

// Recomputes all residuals from scratch against the original problem data.
KktReport check_kkt(const Problem& p, const Solution& s);

// Canonical serialization (JSON). Doubles survive a round trip bit-exactly.
std::string to_json(const Problem& p, int indent = -1);
Problem problem_from_json(const std::string& text);
std::string to_json(const Solution& s, int indent = -1);
Solution solution_from_json(const std::string& text);

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual Solution solve(const Problem& p, const SolveOptions& opts) = 0;
};

class EmbeddedSolver final : public SolverBackend {
 public:
  Solution solve(const Problem& p, const SolveOptions& opts) override {
    return conic::solve(p, opts);
  }
};

// Runs `command < problem.json > solution.json` through the shell and
// parses the result; the canonical serialization is the wire format.
class ExternalCommandSolver final : public SolverBackend {
 public:
  explicit ExternalCommandSolver(std::string command) : command_(std::move(command)) {}
  Solution solve(const Problem& p, const SolveOptions& opts) override;

 private:
  std::string command_;
};

}  // namespace rrbeam::conic
