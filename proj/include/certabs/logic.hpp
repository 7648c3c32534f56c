/*
 * logic.hpp
 *
 * LTL without next: syntax, negation normal form, and finite-trace
 * monitors for sampled traces and dense trajectories.
 *
 * Finite-trace convention: U needs its witness inside the trace (strong),
 * R only constrains the positions that exist (weak). G p = false R p and
 * F p = true U p, so G is weak and F is strong.
 */

#ifndef CERTABS_LOGIC_HPP_
#define CERTABS_LOGIC_HPP_

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "certabs/expr.hpp"
#include "certabs/labelling.hpp"
#include "certabs/system.hpp"

namespace certabs {

enum class FormulaOp { top, bottom, atom, negation, conjunction, disjunction, until, release };

struct FormulaNode;
using FormulaPtr = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  FormulaOp op;
  std::string atom;
  FormulaPtr lhs, rhs;  // negation uses lhs
};

class Formula {
public:
  Formula() = default;
  explicit Formula(FormulaPtr n) : node_(std::move(n)) {}

  static Formula top();
  static Formula bottom();
  static Formula atom(std::string name);
  static Formula negation(const Formula& f);
  static Formula conjunction(const Formula& a, const Formula& b);
  static Formula disjunction(const Formula& a, const Formula& b);
  static Formula until(const Formula& a, const Formula& b);
  static Formula release(const Formula& a, const Formula& b);
  static Formula always(const Formula& f) { return release(bottom(), f); }
  static Formula eventually(const Formula& f) { return until(top(), f); }

  FormulaOp op() const { return node_->op; }
  const std::string& atom_name() const { return node_->atom; }
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }
  bool empty() const noexcept { return !node_; }
  const FormulaNode* node() const noexcept { return node_.get(); }

  std::set<std::string> atoms() const;
  /* no negation, no implication: only true/false/atoms/&/|/U/R */
  bool is_nnf() const;
  /* no temporal operator */
  bool is_propositional() const;

  /* G/F are printed for false R / true U */
  std::string to_string() const;

  friend bool operator==(const Formula& a, const Formula& b);

private:
  FormulaPtr node_;
};

/*
 * Grammar, loosest binding first:
 *   or     := and ('|' and)*
 *   and    := until ('&' until)*
 *   until  := prefix (('U' | 'R') until)?        right associative
 *   prefix := '!' prefix | 'G' prefix | 'F' prefix | primary
 *   primary:= 'true' | 'false' | identifier | '(' or ')'
 * The next operator 'X' is rejected.
 */
Formula parse_formula(const std::string& text);

/* proposition -> name of the proposition holding exactly on its complement */
using ComplementMap = std::map<std::string, std::string>;

class FormulaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/*
 * Push negations to atoms (De Morgan, !(a U b) = !a R !b, !(a R b) = !a U !b)
 * and replace each negated atom by its declared complement.
 */
Formula to_nnf(const Formula& f, const ComplementMap& complements);

enum class Verdict { sat, unsat, unknown };
const char* verdict_name(Verdict v);

/* finite sequence of proposition sets over a named alphabet */
struct Trace {
  std::vector<std::string> alphabet;
  std::vector<PropSet> steps;
};

/*
 * Evaluate at position 0 under the finite-trace convention. Negation is
 * handled by negating the verdict of its operand. Throws FormulaError for
 * atoms outside the alphabet or an empty trace.
 */
Verdict check_discrete(const Trace& trace, const Formula& f);

/*
 * Continuous-time check on the piecewise-linear interpolant of the dense
 * samples. Sample instants and the open segments between them are
 * evaluated alternately; an atom whose truth changes inside a segment is
 * unknown, and the three-valued result is unknown whenever that matters.
 */
Verdict check_continuous(const Trajectory& traj, const LabellingSpec& labels, const Formula& f);

}  // namespace certabs

#endif
