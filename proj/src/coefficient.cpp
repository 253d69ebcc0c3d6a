#include "llhmm/coefficient.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>

#include "llhmm/errors.hpp"

namespace llhmm {

namespace expr {

double Node::eval(const Vec3& x, double eps) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Variable: return var == 3 ? eps : x[var];
    case Kind::Add: return lhs->eval(x, eps) + rhs->eval(x, eps);
    case Kind::Sub: return lhs->eval(x, eps) - rhs->eval(x, eps);
    case Kind::Mul: return lhs->eval(x, eps) * rhs->eval(x, eps);
    case Kind::Div: return lhs->eval(x, eps) / rhs->eval(x, eps);
    case Kind::Neg: return -lhs->eval(x, eps);
    case Kind::Sin: return std::sin(lhs->eval(x, eps));
    case Kind::Cos: return std::cos(lhs->eval(x, eps));
    case Kind::Exp: return std::exp(lhs->eval(x, eps));
  }
  return 0.0;
}

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  NodePtr make(Node::Kind k, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  NodePtr expression() {
    NodePtr n = term();
    for (;;) {
      if (consume('+'))
        n = make(Node::Kind::Add, std::move(n), term());
      else if (consume('-'))
        n = make(Node::Kind::Sub, std::move(n), term());
      else
        return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (consume('*'))
        n = make(Node::Kind::Mul, std::move(n), unary());
      else if (consume('/'))
        n = make(Node::Kind::Div, std::move(n), unary());
      else
        return n;
    }
  }

  NodePtr unary() {
    if (consume('-')) return make(Node::Kind::Neg, unary());
    if (consume('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos >= s.size()) throw SyntaxError("unexpected end of expression", pos);
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (c == '(') {
      ++pos;
      NodePtr n = expression();
      if (!consume(')')) throw SyntaxError("expected ')'", pos);
      return n;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", pos);
  }

  NodePtr number() {
    std::size_t end = 0;
    double v;
    try {
      v = std::stod(s.substr(pos), &end);
    } catch (const std::exception&) {
      throw SyntaxError("malformed number", pos);
    }
    pos += end;
    auto n = make(Node::Kind::Constant);
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    std::string id = s.substr(start, pos - start);
    if (id == "sin" || id == "cos" || id == "exp") {
      if (!consume('(')) throw SyntaxError("expected '(' after " + id, pos);
      NodePtr arg = expression();
      if (!consume(')')) throw SyntaxError("expected ')'", pos);
      Node::Kind k = id == "sin"   ? Node::Kind::Sin
                     : id == "cos" ? Node::Kind::Cos
                                   : Node::Kind::Exp;
      return make(k, std::move(arg));
    }
    if (id == "pi") {
      auto n = make(Node::Kind::Constant);
      n->value = M_PI;
      return n;
    }
    if (id == "x1" || id == "x2" || id == "x3" || id == "eps") {
      auto n = make(Node::Kind::Variable);
      n->var = id == "eps" ? 3 : id[1] - '1';
      return n;
    }
    throw UnknownIdentifier("unknown identifier '" + id + "'");
  }
};

}  // namespace

NodePtr parse(const std::string& text) {
  Parser p(text);
  NodePtr n = p.expression();
  p.skip_ws();
  if (p.pos != text.size()) throw SyntaxError("trailing input", p.pos);
  return n;
}

}  // namespace expr

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

struct PresetDef {
  int dim;
  bool cell_periodic;
  std::function<double(const Vec3&, double)> eval;  // a^eps(x)
  std::string expr_text;
};

const std::map<std::string, PresetDef>& preset_registry() {
  static const std::map<std::string, PresetDef> reg = {
      {"EX1",
       {1, true,
        [](const Vec3& x, double eps) { return 1.0 + 0.5 * std::sin(kTwoPi * x.x / eps); },
        "1 + 0.5*sin(2*pi*x1/eps)"}},
      {"EX2",
       {2, true,
        [](const Vec3& x, double eps) {
          double y1 = x.x / eps, y2 = x.y / eps;
          return 0.5 +
                 (0.5 + 0.25 * std::sin(kTwoPi * y1)) * (0.5 + 0.25 * std::sin(kTwoPi * y2)) +
                 0.25 * (std::cos(kTwoPi * (y1 - y2)) + std::sin(kTwoPi * y1));
        },
        "0.5 + (0.5 + 0.25*sin(2*pi*x1/eps))*(0.5 + 0.25*sin(2*pi*x2/eps))"
        " + 0.25*(cos(2*pi*(x1 - x2)/eps) + sin(2*pi*x1/eps))"}},
      {"EX3",
       {2, true,
        [](const Vec3& x, double eps) {
          return (1.1 + 0.5 * std::sin(kTwoPi * x.x / eps)) *
                 (1.1 + 0.5 * std::sin(kTwoPi * x.y / eps));
        },
        "(1.1 + 0.5*sin(2*pi*x1/eps))*(1.1 + 0.5*sin(2*pi*x2/eps))"}},
      {"LOC1D",
       {1, false,
        [](const Vec3& x, double eps) {
          return 1.1 + 0.25 * std::sin(kTwoPi * x.x + 1.1) +
                 0.5 * std::sin(kTwoPi * x.x / eps);
        },
        "1.1 + 0.25*sin(2*pi*x1 + 1.1) + 0.5*sin(2*pi*x1/eps)"}},
      {"QUASI2D",
       {2, false,
        [](const Vec3& x, double eps) {
          return (1.0 + 0.25 * std::sin(kTwoPi * x.x / eps)) *
                 (1.0 + 0.25 * std::sin(kTwoPi * x.y / eps) +
                  0.25 * std::sin(kTwoPi * 1.41 * x.y / eps));
        },
        "(1 + 0.25*sin(2*pi*x1/eps))*(1 + 0.25*sin(2*pi*x2/eps)"
        " + 0.25*sin(2*pi*1.41*x2/eps))"}},
      {"LOC2D",
       {2, false,
        [](const Vec3& x, double eps) {
          return 0.25 * std::exp(-std::cos(kTwoPi * (x.x + x.y) / eps) +
                                 std::sin(kTwoPi * x.x / eps) * std::cos(kTwoPi * x.y));
        },
        "0.25*exp(0 - cos(2*pi*(x1 + x2)/eps) + sin(2*pi*x1/eps)*cos(2*pi*x2))"}},
  };
  return reg;
}

}  // namespace

const std::vector<std::string>& Coefficient::preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, def] : preset_registry()) n.push_back(name);
    return n;
  }();
  return names;
}

std::string Coefficient::preset_expression_text(const std::string& name) {
  auto it = preset_registry().find(name);
  if (it == preset_registry().end()) throw UnknownIdentifier("unknown preset '" + name + "'");
  return it->second.expr_text;
}

Coefficient Coefficient::preset(const std::string& name, double eps) {
  auto it = preset_registry().find(name);
  if (it == preset_registry().end()) throw UnknownIdentifier("unknown preset '" + name + "'");
  Coefficient c;
  c.name_ = name;
  c.dim_ = it->second.dim;
  c.eps_ = eps;
  c.cell_periodic_ = it->second.cell_periodic;
  c.eval_ = it->second.eval;
  c.estimate_bounds();
  return c;
}

Coefficient Coefficient::expression(const std::string& text, double eps, int dim) {
  Coefficient c;
  c.name_ = "expr";
  c.dim_ = dim;
  c.eps_ = eps;
  c.ast_ = expr::parse(text);
  auto ast = c.ast_;
  c.eval_ = [ast](const Vec3& x, double e) { return ast->eval(x, e); };
  c.estimate_bounds();
  return c;
}

void Coefficient::estimate_bounds() {
  // Dense sampling: 1e4 points in 1D, up to 1e4 total in 2D. Cell-periodic
  // coefficients are sampled over one unit cell; otherwise jittered points
  // avoid aliasing the eps-oscillation against a regular sample lattice.
  double lo = 1e300, hi = -1e300;
  auto visit = [&](double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  std::uint64_t rng = 0x9e3779b97f4a7c15ull;
  auto jitter = [&rng]() {
    rng = rng * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(rng >> 11) * 0x1.0p-53;
  };
  if (cell_periodic_) {
    if (dim_ == 1) {
      for (int i = 0; i < 10000; ++i) visit(cell({i / 10000.0, 0, 0}));
    } else {
      for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) visit(cell({i / 100.0, j / 100.0, 0}));
    }
  } else if (dim_ == 1) {
    for (int i = 0; i < 10000; ++i) visit(eval_({(i + jitter()) / 10000.0, 0, 0}, eps_));
  } else {
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j)
        visit(eval_({(i + jitter()) / 100.0, (j + jitter()) / 100.0, 0}, eps_));
  }
  if (!(lo > 0.0)) throw NonPositiveCoefficient("coefficient not strictly positive on samples");
  a_min_ = lo;
  a_max_ = hi;
}

}  // namespace llhmm
