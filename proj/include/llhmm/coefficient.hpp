#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "llhmm/grid.hpp"

namespace llhmm {

namespace expr {

// Parsed arithmetic expression over x1..x3, eps, pi with sin/cos/exp.
// Grammar (EBNF) is documented in docs/expression_grammar.md.
struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };
  Kind kind;
  double value = 0.0;  // Constant
  int var = -1;        // Variable: 0..2 -> x1..x3, 3 -> eps
  NodePtr lhs, rhs;

  double eval(const Vec3& x, double eps) const;
};

NodePtr parse(const std::string& text);  // throws SyntaxError, UnknownIdentifier

}  // namespace expr

// Material coefficient a^eps(x): either a named preset (EX1, EX2, EX3, LOC1D,
// QUASI2D, LOC2D) backed by a compiled closed form, or a parsed expression.
class Coefficient {
 public:
  static Coefficient preset(const std::string& name, double eps);
  static Coefficient expression(const std::string& text, double eps, int dim);

  double operator()(const Vec3& x) const { return eval_(x, eps_); }

  // Unit-cell coefficient a(y) = a^eps(eps * y). Exactly the periodic cell
  // function for the cell-periodic presets; for locally/quasi-periodic
  // coefficients this freezes the slow variable at the origin.
  double cell(const Vec3& y) const { return eval_({y.x * eps_, y.y * eps_, y.z * eps_}, eps_); }

  int dim() const { return dim_; }
  double eps() const { return eps_; }
  double a_min() const { return a_min_; }
  double a_max() const { return a_max_; }
  const std::string& name() const { return name_; }
  bool cell_periodic() const { return cell_periodic_; }

  static const std::vector<std::string>& preset_names();
  // Expression-text twin of a preset (identical values, parsed route).
  static std::string preset_expression_text(const std::string& name);

 private:
  Coefficient() = default;
  void estimate_bounds();

  std::function<double(const Vec3&, double)> eval_;
  std::string name_;
  int dim_ = 1;
  double eps_ = 0.0;
  double a_min_ = 0.0, a_max_ = 0.0;
  bool cell_periodic_ = false;
  std::shared_ptr<expr::Node> ast_;  // kept alive for expression coefficients
};

}  // namespace llhmm
