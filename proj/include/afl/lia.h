#pragma once

// Quantifier-free linear integer arithmetic: the target language of the
// encoding and the wire format spoken with external solvers.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "afl/integer.h"

namespace afl {

/// A linear combination sum(c_i * x_i) + k with nonzero coefficients.
class LinearTerm
{
public:
  LinearTerm() = default;
  LinearTerm(Integer constant) : constant_(constant) {}

  static LinearTerm var(const std::string &name, Integer coeff = 1);

  const std::map<std::string, Integer> &coeffs() const { return coeffs_; }
  Integer constant() const { return constant_; }
  bool is_constant() const { return coeffs_.empty(); }
  /// The variable if this term is exactly `1 * x`.
  const std::string *as_var() const;

  LinearTerm &operator+=(const LinearTerm &o);
  LinearTerm &operator-=(const LinearTerm &o);
  LinearTerm &operator*=(Integer k);

  friend LinearTerm operator+(LinearTerm a, const LinearTerm &b) { return a += b; }
  friend LinearTerm operator-(LinearTerm a, const LinearTerm &b) { return a -= b; }
  friend LinearTerm operator*(LinearTerm a, Integer k) { return a *= k; }
  friend LinearTerm operator*(Integer k, LinearTerm a) { return a *= k; }
  friend bool operator==(const LinearTerm &, const LinearTerm &) = default;
  friend auto operator<=>(const LinearTerm &a, const LinearTerm &b)
  {
    if (auto c = a.coeffs_ <=> b.coeffs_; c != 0) {
      return c;
    }
    return a.constant_ <=> b.constant_;
  }

  /// The term without its constant part.
  LinearTerm variable_part() const;
  std::string to_string() const;

private:
  void add(const std::string &name, Integer coeff);

  std::map<std::string, Integer> coeffs_;
  Integer constant_ = 0;
};

enum class LiaRel
{
  Eq,
  Lt,
  Le
};

struct LiaNode;
using LiaPtr = std::shared_ptr<const LiaNode>;

struct LiaNode
{
  enum class Kind
  {
    True,
    False,
    Atom,
    Not,
    And,
    Or
  };
  Kind kind = Kind::True;
  LiaRel rel = LiaRel::Eq;
  LinearTerm lhs, rhs;
  std::vector<LiaPtr> args;
};

/// Builders. Conjunctions and disjunctions are flattened and simplified
/// against the Boolean constants; atoms between constants are folded.
namespace lia {
LiaPtr truth();
LiaPtr falsity();
LiaPtr boolean(bool v);
LiaPtr atom(LiaRel rel, LinearTerm lhs, LinearTerm rhs);
LiaPtr eq(LinearTerm lhs, LinearTerm rhs);
LiaPtr ne(LinearTerm lhs, LinearTerm rhs);
LiaPtr lt(LinearTerm lhs, LinearTerm rhs);
LiaPtr le(LinearTerm lhs, LinearTerm rhs);
LiaPtr gt(LinearTerm lhs, LinearTerm rhs);
LiaPtr ge(LinearTerm lhs, LinearTerm rhs);
LiaPtr lnot(LiaPtr a);
LiaPtr land(std::vector<LiaPtr> args);
LiaPtr lor(std::vector<LiaPtr> args);
LiaPtr land(LiaPtr a, LiaPtr b);
LiaPtr lor(LiaPtr a, LiaPtr b);
LiaPtr implies(LiaPtr a, LiaPtr b);
LiaPtr iff(LiaPtr a, LiaPtr b);
/// lo <= t <= hi
LiaPtr between(LinearTerm lo, LinearTerm t, LinearTerm hi);
}  // namespace lia

/// A quantifier-free LIA problem: integer declarations plus assertions.
struct LiaFormula
{
  std::vector<std::string> vars;
  std::vector<LiaPtr> assertions;

  /// Declares `name` unless it is already declared.
  const std::string &declare(const std::string &name);
  void add(LiaPtr a);
  void append(const LiaFormula &other);
  /// Number of nodes over all assertions, counting shared nodes once per use.
  std::size_t size() const;

private:
  std::set<std::string> declared_;
};

using LiaModel = std::map<std::string, Integer>;

class MissingVariable : public AflException
{
public:
  explicit MissingVariable(const std::string &name)
      : AflException("no value for variable " + name), name_(name)
  {
  }
  const std::string &name() const { return name_; }

private:
  std::string name_;
};

Integer eval_lia(const LinearTerm &t, const LiaModel &m);
bool eval_lia(const LiaPtr &f, const LiaModel &m);
/// True iff every assertion holds. Throws MissingVariable for undeclared
/// lookups; all declared variables must be in the model.
bool eval_lia(const LiaFormula &f, const LiaModel &m);

bool equal(const LiaNode &a, const LiaNode &b);
bool equal(const LiaFormula &a, const LiaFormula &b);

void collect_vars(const LiaPtr &f, std::set<std::string> &out);

/// SMT-LIB2 symbol syntax: simple symbols are printed bare, others quoted.
std::string smt_symbol(const std::string &name);
std::string to_smtlib(const LinearTerm &t);
std::string to_smtlib(const LiaPtr &f);
/// A complete QF_LIA script: set-logic, declarations, assertions,
/// check-sat and, if requested, get-model.
std::string to_smtlib(const LiaFormula &f, bool with_get_model = true);

class SmtParseError : public AflException
{
public:
  using AflException::AflException;
};

/// Parses scripts produced by to_smtlib (declare-const / declare-fun with
/// Int sort, assert, and ignored set-logic / set-option / check-sat /
/// get-model / exit commands).
LiaFormula parse_smtlib(std::string_view text);

}  // namespace afl
