/*
 * logic.cpp
 */

#include "certabs/logic.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

namespace certabs {

namespace {

FormulaPtr make(FormulaOp op, std::string atom = {}, FormulaPtr l = nullptr, FormulaPtr r = nullptr) {
  auto n = std::make_shared<FormulaNode>();
  n->op = op;
  n->atom = std::move(atom);
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

bool same(const FormulaNode* a, const FormulaNode* b) {
  if (!a || !b) return a == b;
  if (a->op != b->op || a->atom != b->atom) return false;
  return same(a->lhs.get(), b->lhs.get()) && same(a->rhs.get(), b->rhs.get());
}

void print(const Formula& f, std::string& out) {
  switch (f.op()) {
    case FormulaOp::top: out += "true"; return;
    case FormulaOp::bottom: out += "false"; return;
    case FormulaOp::atom: out += f.atom_name(); return;
    case FormulaOp::negation:
      out += '!';
      print(f.lhs(), out);
      return;
    case FormulaOp::release:
      if (f.lhs().op() == FormulaOp::bottom) {
        out += "G ";
        print(f.rhs(), out);
        return;
      }
      break;
    case FormulaOp::until:
      if (f.lhs().op() == FormulaOp::top) {
        out += "F ";
        print(f.rhs(), out);
        return;
      }
      break;
    default: break;
  }
  const char* sym = f.op() == FormulaOp::conjunction   ? " & "
                    : f.op() == FormulaOp::disjunction ? " | "
                    : f.op() == FormulaOp::until       ? " U "
                                                       : " R ";
  out += '(';
  print(f.lhs(), out);
  out += sym;
  print(f.rhs(), out);
  out += ')';
}

class FormulaParser {
public:
  explicit FormulaParser(const std::string& text) : text_(text) { advance(); }

  Formula parse() {
    if (tok_.kind == Tok::end) throw ParseError("empty formula", 1);
    Formula f = disjunction();
    if (tok_.kind == Tok::rparen) throw ParseError("unbalanced parentheses: unexpected ')'", tok_.column);
    if (tok_.kind != Tok::end) throw ParseError("unexpected token '" + tok_.text + "'", tok_.column);
    return f;
  }

private:
  enum class Tok { ident, bang, amp, bar, until, release, always, eventually, lparen, rparen, end };
  struct Token {
    Tok kind = Tok::end;
    std::string text;
    std::size_t column = 0;
  };

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.column = pos_ + 1;
    if (pos_ >= text_.size()) {
      tok_.text = "<end>";
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      tok_.text = text_.substr(start, pos_ - start);
      if (tok_.text == "U") tok_.kind = Tok::until;
      else if (tok_.text == "R") tok_.kind = Tok::release;
      else if (tok_.text == "G") tok_.kind = Tok::always;
      else if (tok_.text == "F") tok_.kind = Tok::eventually;
      else if (tok_.text == "X")
        throw ParseError("the next operator 'X' is not part of the logic", tok_.column);
      else tok_.kind = Tok::ident;
      return;
    }
    ++pos_;
    tok_.text = std::string(1, c);
    switch (c) {
      case '!': tok_.kind = Tok::bang; break;
      case '&': tok_.kind = Tok::amp; break;
      case '|': tok_.kind = Tok::bar; break;
      case '(': tok_.kind = Tok::lparen; break;
      case ')': tok_.kind = Tok::rparen; break;
      default: throw ParseError(std::string("unexpected character '") + c + "'", tok_.column);
    }
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (tok_.kind == Tok::bar) {
      advance();
      f = Formula::disjunction(f, conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = until();
    while (tok_.kind == Tok::amp) {
      advance();
      f = Formula::conjunction(f, until());
    }
    return f;
  }

  Formula until() {
    Formula f = prefix();
    if (tok_.kind == Tok::until || tok_.kind == Tok::release) {
      bool is_until = tok_.kind == Tok::until;
      advance();
      Formula rhs = until();
      return is_until ? Formula::until(f, rhs) : Formula::release(f, rhs);
    }
    return f;
  }

  Formula prefix() {
    switch (tok_.kind) {
      case Tok::bang: advance(); return Formula::negation(prefix());
      case Tok::always: advance(); return Formula::always(prefix());
      case Tok::eventually: advance(); return Formula::eventually(prefix());
      default: return primary();
    }
  }

  Formula primary() {
    Token t = tok_;
    switch (t.kind) {
      case Tok::ident:
        advance();
        if (t.text == "true") return Formula::top();
        if (t.text == "false") return Formula::bottom();
        return Formula::atom(t.text);
      case Tok::lparen: {
        advance();
        Formula f = disjunction();
        if (tok_.kind != Tok::rparen)
          throw ParseError("unbalanced parentheses: '(' at column " + std::to_string(t.column) +
                               " is not closed",
                           tok_.column);
        advance();
        return f;
      }
      case Tok::end: throw ParseError("unexpected end of formula", t.column);
      default: throw ParseError("unexpected token '" + t.text + "'", t.column);
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  Token tok_;
};

Formula nnf(const Formula& f, bool negated, const ComplementMap& comp) {
  switch (f.op()) {
    case FormulaOp::top: return negated ? Formula::bottom() : Formula::top();
    case FormulaOp::bottom: return negated ? Formula::top() : Formula::bottom();
    case FormulaOp::atom: {
      if (!negated) return f;
      auto it = comp.find(f.atom_name());
      if (it == comp.end())
        throw FormulaError("negated proposition '" + f.atom_name() +
                           "' has no declared complement");
      return Formula::atom(it->second);
    }
    case FormulaOp::negation: return nnf(f.lhs(), !negated, comp);
    case FormulaOp::conjunction: {
      Formula a = nnf(f.lhs(), negated, comp), b = nnf(f.rhs(), negated, comp);
      return negated ? Formula::disjunction(a, b) : Formula::conjunction(a, b);
    }
    case FormulaOp::disjunction: {
      Formula a = nnf(f.lhs(), negated, comp), b = nnf(f.rhs(), negated, comp);
      return negated ? Formula::conjunction(a, b) : Formula::disjunction(a, b);
    }
    case FormulaOp::until: {
      Formula a = nnf(f.lhs(), negated, comp), b = nnf(f.rhs(), negated, comp);
      return negated ? Formula::release(a, b) : Formula::until(a, b);
    }
    case FormulaOp::release: {
      Formula a = nnf(f.lhs(), negated, comp), b = nnf(f.rhs(), negated, comp);
      return negated ? Formula::until(a, b) : Formula::release(a, b);
    }
  }
  return f;
}

/* truth values: 0 false, 1 unknown, 2 true (Kleene order) */
using Tri = std::uint8_t;
constexpr Tri kFalse = 0, kUnknown = 1, kTrue = 2;

/*
 * Backward evaluation of every subformula over positions 0..n-1.
 * atom_value(atom_index, position) supplies the leaves.
 */
class Evaluator {
public:
  Evaluator(std::size_t length, std::vector<std::vector<Tri>> atom_values,
            const std::vector<std::string>& alphabet)
      : n_(length), atoms_(std::move(atom_values)), alphabet_(alphabet) {}

  std::vector<Tri> eval(const Formula& f) const {
    std::vector<Tri> out(n_);
    switch (f.op()) {
      case FormulaOp::top: std::fill(out.begin(), out.end(), kTrue); break;
      case FormulaOp::bottom: std::fill(out.begin(), out.end(), kFalse); break;
      case FormulaOp::atom: {
        auto it = std::find(alphabet_.begin(), alphabet_.end(), f.atom_name());
        if (it == alphabet_.end())
          throw FormulaError("unknown proposition '" + f.atom_name() + "'");
        out = atoms_[static_cast<std::size_t>(it - alphabet_.begin())];
        break;
      }
      case FormulaOp::negation: {
        out = eval(f.lhs());
        for (auto& v : out) v = static_cast<Tri>(kTrue - v);
        break;
      }
      case FormulaOp::conjunction:
      case FormulaOp::disjunction: {
        auto a = eval(f.lhs()), b = eval(f.rhs());
        bool conj = f.op() == FormulaOp::conjunction;
        for (std::size_t i = 0; i < n_; ++i) out[i] = conj ? std::min(a[i], b[i]) : std::max(a[i], b[i]);
        break;
      }
      case FormulaOp::until: {
        auto a = eval(f.lhs()), b = eval(f.rhs());
        Tri next = kFalse;
        for (std::size_t i = n_; i-- > 0;) {
          next = std::max(b[i], std::min(a[i], next));
          out[i] = next;
        }
        break;
      }
      case FormulaOp::release: {
        auto a = eval(f.lhs()), b = eval(f.rhs());
        Tri next = kTrue;
        for (std::size_t i = n_; i-- > 0;) {
          next = std::min(b[i], std::max(a[i], next));
          out[i] = next;
        }
        break;
      }
    }
    return out;
  }

private:
  std::size_t n_;
  std::vector<std::vector<Tri>> atoms_;
  const std::vector<std::string>& alphabet_;
};

Verdict to_verdict(Tri v) { return v == kTrue ? Verdict::sat : v == kFalse ? Verdict::unsat : Verdict::unknown; }

/*
 * Parametric clip of the segment p + s (q - p), s in [0,1], against a box.
 * Returns false when disjoint; otherwise [smin, smax].
 */
bool clip_segment(std::span<const double> p, std::span<const double> q, const Box& b, double& smin,
                  double& smax) {
  smin = 0.0;
  smax = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = q[i] - p[i];
    if (d == 0.0) {
      if (p[i] < b.lower[i] || p[i] > b.upper[i]) return false;
      continue;
    }
    double s1 = (b.lower[i] - p[i]) / d, s2 = (b.upper[i] - p[i]) / d;
    if (s1 > s2) std::swap(s1, s2);
    smin = std::max(smin, s1);
    smax = std::min(smax, s2);
    if (smin > smax) return false;
  }
  return true;
}

/* truth of one proposition on the open segment between two samples */
Tri segment_value(const Proposition& prop, std::span<const double> p, std::span<const double> q) {
  bool touches = false;
  for (const auto& b : prop.region) {
    if (b.contains(p) && b.contains(q)) return kTrue;
    double smin, smax;
    if (!clip_segment(p, q, b, smin, smax)) continue;
    bool open_hit = (smax > 0.0 && smin < 1.0 && smin < smax) || (smin == smax && smin > 0.0 && smin < 1.0);
    if (open_hit) touches = true;
  }
  return touches ? kUnknown : kFalse;
}

}  // namespace

Formula Formula::top() { return Formula(make(FormulaOp::top)); }
Formula Formula::bottom() { return Formula(make(FormulaOp::bottom)); }
Formula Formula::atom(std::string name) { return Formula(make(FormulaOp::atom, std::move(name))); }
Formula Formula::negation(const Formula& f) { return Formula(make(FormulaOp::negation, {}, f.node_)); }
Formula Formula::conjunction(const Formula& a, const Formula& b) {
  return Formula(make(FormulaOp::conjunction, {}, a.node_, b.node_));
}
Formula Formula::disjunction(const Formula& a, const Formula& b) {
  return Formula(make(FormulaOp::disjunction, {}, a.node_, b.node_));
}
Formula Formula::until(const Formula& a, const Formula& b) {
  return Formula(make(FormulaOp::until, {}, a.node_, b.node_));
}
Formula Formula::release(const Formula& a, const Formula& b) {
  return Formula(make(FormulaOp::release, {}, a.node_, b.node_));
}

std::set<std::string> Formula::atoms() const {
  std::set<std::string> out;
  if (!node_) return out;
  if (op() == FormulaOp::atom) out.insert(atom_name());
  if (node_->lhs) out.merge(lhs().atoms());
  if (node_->rhs) out.merge(rhs().atoms());
  return out;
}

bool Formula::is_nnf() const {
  if (!node_) return true;
  if (op() == FormulaOp::negation) return false;
  return (!node_->lhs || lhs().is_nnf()) && (!node_->rhs || rhs().is_nnf());
}

bool Formula::is_propositional() const {
  if (!node_) return true;
  if (op() == FormulaOp::until || op() == FormulaOp::release) return false;
  return (!node_->lhs || lhs().is_propositional()) && (!node_->rhs || rhs().is_propositional());
}

std::string Formula::to_string() const {
  std::string out;
  if (node_) print(*this, out);
  return out;
}

bool operator==(const Formula& a, const Formula& b) { return same(a.node_.get(), b.node_.get()); }

Formula parse_formula(const std::string& text) { return FormulaParser(text).parse(); }

Formula to_nnf(const Formula& f, const ComplementMap& complements) {
  return nnf(f, false, complements);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::sat: return "sat";
    case Verdict::unsat: return "unsat";
    case Verdict::unknown: return "unknown";
  }
  return "?";
}

Verdict check_discrete(const Trace& trace, const Formula& f) {
  if (trace.steps.empty()) throw FormulaError("empty trace");
  const std::size_t n = trace.steps.size();
  std::vector<std::vector<Tri>> atoms(trace.alphabet.size(), std::vector<Tri>(n));
  for (std::size_t a = 0; a < trace.alphabet.size(); ++a)
    for (std::size_t i = 0; i < n; ++i) atoms[a][i] = trace.steps[i].contains(a) ? kTrue : kFalse;
  Evaluator ev(n, std::move(atoms), trace.alphabet);
  return to_verdict(ev.eval(f)[0]);
}

Verdict check_continuous(const Trajectory& traj, const LabellingSpec& labels, const Formula& f) {
  if (traj.x.empty()) throw FormulaError("empty trajectory");
  const std::size_t samples = traj.x.size();
  const std::size_t n = 2 * samples - 1;  // sample, segment, sample, ...
  const auto& props = labels.propositions();
  std::vector<std::vector<Tri>> atoms(props.size(), std::vector<Tri>(n));
  for (std::size_t k = 0; k < samples; ++k) {
    PropSet at = labels.label(traj.x[k]);
    for (std::size_t a = 0; a < props.size(); ++a) {
      atoms[a][2 * k] = at.contains(a) ? kTrue : kFalse;
      if (k + 1 < samples) atoms[a][2 * k + 1] = segment_value(props[a], traj.x[k], traj.x[k + 1]);
    }
  }
  auto alphabet = labels.names();
  Evaluator ev(n, std::move(atoms), alphabet);
  return to_verdict(ev.eval(f)[0]);
}

}  // namespace certabs
