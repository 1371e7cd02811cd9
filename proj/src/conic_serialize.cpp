#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rrbeam/conic.hpp"

namespace rrbeam::conic {

namespace {

using nlohmann::json;

json expr_to_json(const Problem& p, const LinExpr& e) {
  json j;
  json blocks = json::object();
  for (const auto& [b, g] : e.block_coeffs) {
    json coords = json::array();
    for (int i = 0; i < g.dim(); ++i)
      for (int k = i; k < g.dim(); ++k)
        if (g(i, k) != 0.0) coords.push_back(json::array({i, k, g(i, k)}));
    blocks[p.psd_blocks[b].first] = coords;
  }
  j["blocks"] = blocks;
  json scalars = json::object();
  for (const auto& [s, w] : e.scalar_coeffs) scalars[p.nonneg_scalars[s]] = w;
  j["scalars"] = scalars;
  j["constant"] = e.constant;
  return j;
}

LinExpr expr_from_json(const Problem& p, const json& j) {
  LinExpr e;
  auto block_index = [&](const std::string& name) {
    for (size_t i = 0; i < p.psd_blocks.size(); ++i)
      if (p.psd_blocks[i].first == name) return int(i);
    throw InvalidInput("conic json: unknown block " + name);
  };
  auto scalar_index = [&](const std::string& name) {
    for (size_t i = 0; i < p.nonneg_scalars.size(); ++i)
      if (p.nonneg_scalars[i] == name) return int(i);
    throw InvalidInput("conic json: unknown scalar " + name);
  };
  for (const auto& [name, coords] : j.at("blocks").items()) {
    const int b = block_index(name);
    SymMatrix g(p.psd_blocks[b].second);
    for (const auto& c : coords) {
      const int i = c.at(0).get<int>();
      const int k = c.at(1).get<int>();
      g.set(i, k, c.at(2).get<double>());
    }
    e.block_coeffs.emplace(b, std::move(g));
  }
  for (const auto& [name, w] : j.at("scalars").items())
    e.scalar_coeffs[scalar_index(name)] = w.get<double>();
  e.constant = j.at("constant").get<double>();
  return e;
}

std::string sense_str(Sense s) {
  switch (s) {
    case Sense::LessEqual: return "<=";
    case Sense::GreaterEqual: return ">=";
    case Sense::Equal: return "==";
  }
  return "?";
}

Sense sense_from(const std::string& s) {
  if (s == "<=") return Sense::LessEqual;
  if (s == ">=") return Sense::GreaterEqual;
  if (s == "==") return Sense::Equal;
  throw InvalidInput("conic json: bad sense " + s);
}

}  // namespace

std::string to_json(const Problem& p, int indent) {
  json j;
  j["blocks"] = json::array();
  for (const auto& [name, dim] : p.psd_blocks)
    j["blocks"].push_back(json{{"name", name}, {"dim", dim}});
  j["scalars"] = json::array();
  for (const auto& name : p.nonneg_scalars) j["scalars"].push_back(name);
  j["objective"] = expr_to_json(p, p.objective);
  j["constraints"] = json::array();
  for (const auto& lc : p.linear_constraints)
    j["constraints"].push_back(json{{"type", "linear"},
                                    {"name", lc.name},
                                    {"sense", sense_str(lc.sense)},
                                    {"expr", expr_to_json(p, lc.expr)}});
  for (const auto& lmi : p.lmi_constraints) {
    json entries = json::array();
    for (int i = 0; i < lmi.dim; ++i)
      for (int k = i; k < lmi.dim; ++k)
        entries.push_back(
            json{{"i", i}, {"j", k}, {"expr", expr_to_json(p, lmi.entry(i, k))}});
    j["constraints"].push_back(
        json{{"type", "lmi"}, {"name", lmi.name}, {"dim", lmi.dim}, {"entries", entries}});
  }
  return j.dump(indent);
}

Problem problem_from_json(const std::string& text) {
  const json j = json::parse(text);
  Problem p;
  for (const auto& b : j.at("blocks"))
    p.add_psd_block(b.at("name").get<std::string>(), b.at("dim").get<int>());
  for (const auto& s : j.at("scalars")) p.add_nonneg_scalar(s.get<std::string>());
  p.objective = expr_from_json(p, j.at("objective"));
  for (const auto& c : j.at("constraints")) {
    const std::string type = c.at("type").get<std::string>();
    if (type == "linear") {
      p.add_linear(c.at("name").get<std::string>(), expr_from_json(p, c.at("expr")),
                   sense_from(c.at("sense").get<std::string>()));
    } else if (type == "lmi") {
      LmiConstraint& lmi = p.add_lmi(c.at("name").get<std::string>(), c.at("dim").get<int>());
      for (const auto& e : c.at("entries"))
        lmi.entry(e.at("i").get<int>(), e.at("j").get<int>()) =
            expr_from_json(p, e.at("expr"));
    } else {
      throw InvalidInput("conic json: unknown constraint type " + type);
    }
  }
  p.validate();
  return p;
}

std::string to_json(const Solution& s, int indent) {
  json j;
  j["status"] = to_string(s.status);
  j["objective"] = s.objective;
  j["dual_objective"] = s.dual_objective;
  j["iterations"] = s.iterations;
  j["blocks"] = json::array();
  for (const auto& x : s.block_values) {
    json coords = json::array();
    for (int i = 0; i < x.dim(); ++i)
      for (int k = i; k < x.dim(); ++k)
        if (x(i, k) != 0.0) coords.push_back(json::array({i, k, x(i, k)}));
    j["blocks"].push_back(json{{"dim", x.dim()}, {"coords", coords}});
  }
  j["scalar_values"] = s.scalar_values;
  j["eq_duals"] = s.eq_duals;
  j["kkt"] = json{{"primal_residual", s.kkt.primal_residual},
                  {"dual_residual", s.kkt.dual_residual},
                  {"duality_gap", s.kkt.duality_gap}};
  return j.dump(indent);
}

Solution solution_from_json(const std::string& text) {
  const json j = json::parse(text);
  Solution s;
  const std::string st = j.at("status").get<std::string>();
  if (st == "optimal")
    s.status = SolveStatus::Optimal;
  else if (st == "infeasible")
    s.status = SolveStatus::Infeasible;
  else if (st == "unbounded")
    s.status = SolveStatus::Unbounded;
  else if (st == "max_iter")
    s.status = SolveStatus::MaxIterations;
  else
    s.status = SolveStatus::NumericalError;
  s.objective = j.at("objective").get<double>();
  s.dual_objective = j.at("dual_objective").get<double>();
  s.iterations = j.at("iterations").get<int>();
  for (const auto& b : j.at("blocks")) {
    SymMatrix x(b.at("dim").get<int>());
    for (const auto& c : b.at("coords"))
      x.set(c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<double>());
    s.block_values.push_back(std::move(x));
  }
  s.scalar_values = j.at("scalar_values").get<std::vector<double>>();
  s.eq_duals = j.at("eq_duals").get<std::vector<double>>();
  s.kkt.primal_residual = j.at("kkt").at("primal_residual").get<double>();
  s.kkt.dual_residual = j.at("kkt").at("dual_residual").get<double>();
  s.kkt.duality_gap = j.at("kkt").at("duality_gap").get<double>();
  return s;
}

Solution ExternalCommandSolver::solve(const Problem& p, const SolveOptions& opts) {
  (void)opts;
  char in_name[] = "/tmp/rrbeam_prob_XXXXXX";
  char out_name[] = "/tmp/rrbeam_sol_XXXXXX";
  const int in_fd = mkstemp(in_name);
  const int out_fd = mkstemp(out_name);
  if (in_fd < 0 || out_fd < 0) throw Error("external solver: cannot create temp files");
  {
    std::ofstream f(in_name);
    f << to_json(p);
  }
  const std::string cmd = command_ + " < " + in_name + " > " + out_name;
  const int rc = std::system(cmd.c_str());
  std::string out_text;
  {
    std::ifstream f(out_name);
    std::stringstream ss;
    ss << f.rdbuf();
    out_text = ss.str();
  }
  std::remove(in_name);
  std::remove(out_name);
  if (rc != 0) throw Error("external solver command failed: " + command_);
  return solution_from_json(out_text);
}

}  // namespace rrbeam::conic
