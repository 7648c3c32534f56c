/*
 * expr.hpp
 *
 * Arithmetic expressions for vector fields read from config files.
 */

#ifndef CERTABS_EXPR_HPP_
#define CERTABS_EXPR_HPP_

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace certabs {

/* syntax error, reported with a 1-based column */
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t column)
      : std::runtime_error(what + " (column " + std::to_string(column) + ")"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t column_;
};

/* evaluation failure: unbound variable or a domain error */
class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class BinaryOp { add, sub, mul, div, pow };
enum class Function { sin, cos, tan, atan, exp, log, sqrt, abs, min, max };

const char* function_name(Function f);
bool is_function_name(const std::string& name);
std::size_t function_arity(Function f);

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { number, variable, negate, binary, call };

  Kind kind;
  double value = 0.0;    // number
  std::string name;      // variable
  BinaryOp op = BinaryOp::add;
  Function fn = Function::sin;
  std::vector<ExprPtr> args;  // negate: 1, binary: 2, call: arity
};

/*
 * class: Expression
 *
 * Immutable AST. Copies share the tree, so evaluation from several
 * threads is safe as long as each call brings its own environment.
 */
class Expression {
public:
  Expression() = default;
  explicit Expression(ExprPtr root) : root_(std::move(root)) {}

  static Expression number(double v);
  static Expression variable(std::string name);
  static Expression negate(const Expression& e);
  static Expression binary(BinaryOp op, const Expression& l, const Expression& r);
  static Expression call(Function fn, std::vector<Expression> args);

  const ExprNode& root() const { return *root_; }
  bool empty() const noexcept { return !root_; }

  /* every variable name, sorted and unique */
  std::vector<std::string> variables() const;

  /* fully parenthesized text that parses back to the same tree */
  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

private:
  ExprPtr root_;
};

/*
 * Grammar (standard precedence, left associative within a level):
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := '-' unary | power
 *   power   := primary ('^' operand)*
 *   operand := '-' operand | primary
 *   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
 */
Expression parse_expression(const std::string& text);

using Environment = std::map<std::string, double, std::less<>>;

/* throws EvalError on an unbound variable or a domain error */
double eval(const Expression& e, const Environment& env);

/*
 * Expression with variables resolved to slots of a flat argument array.
 * Used on hot paths (abstraction construction, simulation).
 */
class CompiledExpression {
public:
  CompiledExpression(const Expression& e, const std::vector<std::string>& slots);

  double operator()(std::span<const double> slots) const;

private:
  struct Op {
    ExprNode::Kind kind;
    BinaryOp bop;
    Function fn;
    double value;
    int slot;
    int a, b;  // child op indices
    const ExprNode* node;
  };
  int emit(const ExprNode& n, const std::vector<std::string>& slots);
  double run(int i, std::span<const double> s) const;

  Expression source_;
  std::vector<Op> ops_;
  int root_ = -1;
};

}  // namespace certabs

#endif
