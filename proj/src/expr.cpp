/*
 * expr.cpp
 */

#include "certabs/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace certabs {

namespace {

struct FunctionInfo {
  const char* name;
  Function fn;
  std::size_t arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", Function::sin, 1},   {"cos", Function::cos, 1},   {"tan", Function::tan, 1},
    {"atan", Function::atan, 1}, {"exp", Function::exp, 1},   {"log", Function::log, 1},
    {"sqrt", Function::sqrt, 1}, {"abs", Function::abs, 1},   {"min", Function::min, 2},
    {"max", Function::max, 2},
};

const FunctionInfo* find_function(std::string_view name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

char op_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return '+';
    case BinaryOp::sub: return '-';
    case BinaryOp::mul: return '*';
    case BinaryOp::div: return '/';
    case BinaryOp::pow: return '^';
  }
  return '?';
}

/* tokenizer + recursive descent parser */
class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) { advance(); }

  Expression parse() {
    if (tok_.kind == Tok::end) throw ParseError("empty expression", 1);
    Expression e = expr();
    if (tok_.kind == Tok::rparen) throw ParseError("unbalanced parentheses: unexpected ')'", tok_.column);
    if (tok_.kind != Tok::end) {
      std::string msg = "unexpected token '" + tok_.text + "'";
      if (tok_.kind == Tok::name || tok_.kind == Tok::lparen || tok_.kind == Tok::number)
        msg += " (missing operator? implicit multiplication is not supported)";
      throw ParseError(msg, tok_.column);
    }
    return e;
  }

private:
  enum class Tok { number, name, plus, minus, star, slash, caret, lparen, rparen, comma, end };
  struct Token {
    Tok kind = Tok::end;
    std::string text;
    double value = 0.0;
    std::size_t column = 0;
  };

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.column = pos_ + 1;
    if (pos_ >= text_.size()) {
      tok_.kind = Tok::end;
      tok_.text = "<end>";
      return;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("malformed number", tok_.column);
      tok_.kind = Tok::number;
      tok_.value = v;
      tok_.text.assign(begin, static_cast<std::size_t>(end - begin));
      pos_ += static_cast<std::size_t>(end - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      tok_.kind = Tok::name;
      tok_.text = text_.substr(start, pos_ - start);
      return;
    }
    ++pos_;
    tok_.text = std::string(1, c);
    switch (c) {
      case '+': tok_.kind = Tok::plus; break;
      case '-': tok_.kind = Tok::minus; break;
      case '*': tok_.kind = Tok::star; break;
      case '/': tok_.kind = Tok::slash; break;
      case '^': tok_.kind = Tok::caret; break;
      case '(': tok_.kind = Tok::lparen; break;
      case ')': tok_.kind = Tok::rparen; break;
      case ',': tok_.kind = Tok::comma; break;
      default: throw ParseError(std::string("unexpected character '") + c + "'", tok_.column);
    }
  }

  Expression expr() {
    Expression lhs = term();
    while (tok_.kind == Tok::plus || tok_.kind == Tok::minus) {
      BinaryOp op = tok_.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
      advance();
      lhs = Expression::binary(op, lhs, term());
    }
    return lhs;
  }

  Expression term() {
    Expression lhs = unary();
    while (tok_.kind == Tok::star || tok_.kind == Tok::slash) {
      BinaryOp op = tok_.kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
      advance();
      lhs = Expression::binary(op, lhs, unary());
    }
    return lhs;
  }

  Expression unary() {
    if (tok_.kind == Tok::minus) {
      advance();
      return Expression::negate(unary());
    }
    return power();
  }

  Expression power() {
    Expression lhs = primary();
    while (tok_.kind == Tok::caret) {
      advance();
      lhs = Expression::binary(BinaryOp::pow, lhs, operand());
    }
    return lhs;
  }

  Expression operand() {
    if (tok_.kind == Tok::minus) {
      advance();
      return Expression::negate(operand());
    }
    return primary();
  }

  Expression primary() {
    Token t = tok_;
    switch (t.kind) {
      case Tok::number:
        advance();
        return Expression::number(t.value);
      case Tok::name: {
        advance();
        if (tok_.kind != Tok::lparen) {
          if (find_function(t.text)) throw ParseError("function '" + t.text + "' needs arguments", t.column);
          return Expression::variable(t.text);
        }
        const FunctionInfo* info = find_function(t.text);
        if (!info) throw ParseError("unknown function '" + t.text + "'", t.column);
        std::size_t open = tok_.column;
        advance();
        std::vector<Expression> args;
        args.push_back(expr());
        while (tok_.kind == Tok::comma) {
          advance();
          args.push_back(expr());
        }
        if (tok_.kind != Tok::rparen)
          throw ParseError("unbalanced parentheses: '(' at column " + std::to_string(open) +
                               " is not closed",
                           tok_.column);
        advance();
        if (args.size() != info->arity)
          throw ParseError("function '" + t.text + "' expects " + std::to_string(info->arity) +
                               " argument(s), got " + std::to_string(args.size()),
                           t.column);
        return Expression::call(info->fn, std::move(args));
      }
      case Tok::lparen: {
        advance();
        Expression e = expr();
        if (tok_.kind != Tok::rparen)
          throw ParseError("unbalanced parentheses: '(' at column " + std::to_string(t.column) +
                               " is not closed",
                           tok_.column);
        advance();
        return e;
      }
      case Tok::rparen:
        throw ParseError("unbalanced parentheses: unexpected ')'", t.column);
      case Tok::end:
        throw ParseError("unexpected end of expression", t.column);
      default:
        throw ParseError("unexpected token '" + t.text + "'", t.column);
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  Token tok_;
};

void collect_variables(const ExprNode& n, std::set<std::string>& out) {
  if (n.kind == ExprNode::Kind::variable) out.insert(n.name);
  for (const auto& a : n.args) collect_variables(*a, out);
}

void print(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::number: out += format_number(n.value); break;
    case ExprNode::Kind::variable: out += n.name; break;
    case ExprNode::Kind::negate:
      out += "(-";
      print(*n.args[0], out);
      out += ')';
      break;
    case ExprNode::Kind::binary:
      out += '(';
      print(*n.args[0], out);
      out += ' ';
      out += op_char(n.op);
      out += ' ';
      print(*n.args[1], out);
      out += ')';
      break;
    case ExprNode::Kind::call:
      out += function_name(n.fn);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print(*n.args[i], out);
      }
      out += ')';
      break;
  }
}

bool same(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case ExprNode::Kind::number:
      if (!(a.value == b.value) && !(std::isnan(a.value) && std::isnan(b.value))) return false;
      break;
    case ExprNode::Kind::variable:
      if (a.name != b.name) return false;
      break;
    case ExprNode::Kind::binary:
      if (a.op != b.op) return false;
      break;
    case ExprNode::Kind::call:
      if (a.fn != b.fn) return false;
      break;
    case ExprNode::Kind::negate: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same(*a.args[i], *b.args[i])) return false;
  return true;
}

[[noreturn]] void domain_error(const ExprNode& n, const std::string& what) {
  std::string text;
  print(n, text);
  throw EvalError("domain error: " + what + " in '" + text + "'");
}

double apply_binary(const ExprNode& n, double l, double r) {
  switch (n.op) {
    case BinaryOp::add: return l + r;
    case BinaryOp::sub: return l - r;
    case BinaryOp::mul: return l * r;
    case BinaryOp::div:
      if (r == 0.0) domain_error(n, "division by zero");
      return l / r;
    case BinaryOp::pow: {
      double v = std::pow(l, r);
      if (std::isnan(v) && !std::isnan(l) && !std::isnan(r))
        domain_error(n, "power of a negative base with a non-integer exponent");
      return v;
    }
  }
  return 0.0;
}

double apply_function(const ExprNode& n, double a, double b) {
  switch (n.fn) {
    case Function::sin: return std::sin(a);
    case Function::cos: return std::cos(a);
    case Function::tan: return std::tan(a);
    case Function::atan: return std::atan(a);
    case Function::exp: return std::exp(a);
    case Function::log:
      if (!(a > 0.0)) domain_error(n, "logarithm of a non-positive value");
      return std::log(a);
    case Function::sqrt:
      if (a < 0.0) domain_error(n, "square root of a negative value");
      return std::sqrt(a);
    case Function::abs: return std::fabs(a);
    case Function::min: return std::min(a, b);
    case Function::max: return std::max(a, b);
  }
  return 0.0;
}

double eval_node(const ExprNode& n, const Environment& env) {
  switch (n.kind) {
    case ExprNode::Kind::number: return n.value;
    case ExprNode::Kind::variable: {
      auto it = env.find(n.name);
      if (it == env.end()) throw EvalError("unbound variable '" + n.name + "'");
      return it->second;
    }
    case ExprNode::Kind::negate: return -eval_node(*n.args[0], env);
    case ExprNode::Kind::binary:
      return apply_binary(n, eval_node(*n.args[0], env), eval_node(*n.args[1], env));
    case ExprNode::Kind::call: {
      double a = eval_node(*n.args[0], env);
      double b = n.args.size() > 1 ? eval_node(*n.args[1], env) : 0.0;
      return apply_function(n, a, b);
    }
  }
  return 0.0;
}

}  // namespace

const char* function_name(Function f) {
  for (const auto& info : kFunctions)
    if (info.fn == f) return info.name;
  return "?";
}

bool is_function_name(const std::string& name) { return find_function(name) != nullptr; }

std::size_t function_arity(Function f) {
  for (const auto& info : kFunctions)
    if (info.fn == f) return info.arity;
  return 0;
}

Expression Expression::number(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::number;
  n->value = v;
  return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::variable;
  n->name = std::move(name);
  return Expression(std::move(n));
}

Expression Expression::negate(const Expression& e) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::negate;
  n->args = {e.root_};
  return Expression(std::move(n));
}

Expression Expression::binary(BinaryOp op, const Expression& l, const Expression& r) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::binary;
  n->op = op;
  n->args = {l.root_, r.root_};
  return Expression(std::move(n));
}

Expression Expression::call(Function fn, std::vector<Expression> args) {
  if (args.size() != function_arity(fn))
    throw std::invalid_argument(std::string("wrong arity for ") + function_name(fn));
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::call;
  n->fn = fn;
  for (auto& a : args) n->args.push_back(a.root_);
  return Expression(std::move(n));
}

std::vector<std::string> Expression::variables() const {
  std::set<std::string> names;
  if (root_) collect_variables(*root_, names);
  return {names.begin(), names.end()};
}

std::string Expression::to_string() const {
  std::string out;
  if (root_) print(*root_, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) {
  if (!a.root_ || !b.root_) return !a.root_ && !b.root_;
  return same(*a.root_, *b.root_);
}

Expression parse_expression(const std::string& text) { return Parser(text).parse(); }

double eval(const Expression& e, const Environment& env) {
  if (e.empty()) throw EvalError("empty expression");
  return eval_node(e.root(), env);
}

CompiledExpression::CompiledExpression(const Expression& e, const std::vector<std::string>& slots)
    : source_(e) {
  if (e.empty()) throw EvalError("empty expression");
  root_ = emit(e.root(), slots);
}

int CompiledExpression::emit(const ExprNode& n, const std::vector<std::string>& slots) {
  Op op{n.kind, n.op, n.fn, n.value, -1, -1, -1, &n};
  if (n.kind == ExprNode::Kind::variable) {
    auto it = std::find(slots.begin(), slots.end(), n.name);
    if (it == slots.end()) throw EvalError("unbound variable '" + n.name + "'");
    op.slot = static_cast<int>(it - slots.begin());
  }
  if (!n.args.empty()) op.a = emit(*n.args[0], slots);
  if (n.args.size() > 1) op.b = emit(*n.args[1], slots);
  ops_.push_back(op);
  return static_cast<int>(ops_.size()) - 1;
}

double CompiledExpression::run(int i, std::span<const double> s) const {
  const Op& op = ops_[static_cast<std::size_t>(i)];
  switch (op.kind) {
    case ExprNode::Kind::number: return op.value;
    case ExprNode::Kind::variable: return s[static_cast<std::size_t>(op.slot)];
    case ExprNode::Kind::negate: return -run(op.a, s);
    case ExprNode::Kind::binary: return apply_binary(*op.node, run(op.a, s), run(op.b, s));
    case ExprNode::Kind::call:
      return apply_function(*op.node, run(op.a, s), op.b >= 0 ? run(op.b, s) : 0.0);
  }
  return 0.0;
}

double CompiledExpression::operator()(std::span<const double> slots) const {
  return run(root_, slots);
}

}  // namespace certabs
