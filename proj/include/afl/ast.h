#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "afl/error.h"
#include "afl/integer.h"

namespace afl {

enum class Sort
{
  Array,
  Int
};

std::string to_string(Sort sort);

/// Comparison operators. In normalized formulas only Lt and Eq occur between
/// integer terms, and only Lt, Gt, Eq, Ne occur in guards.
enum class Cmp
{
  Lt,
  Gt,
  Eq,
  Ne,
  Le,
  Ge
};

std::string to_string(Cmp cmp);
Cmp negate(Cmp cmp);
/// The comparison obtained by swapping the operands: a < b  <=>  b > a.
Cmp flip(Cmp cmp);
bool compare(Integer lhs, Cmp cmp, Integer rhs);

struct IntTerm;
struct ArrayTerm;
struct BoolTerm;
struct VectorTerm;
using IntTermPtr = std::shared_ptr<const IntTerm>;
using ArrayTermPtr = std::shared_ptr<const ArrayTerm>;
using BoolTermPtr = std::shared_ptr<const BoolTerm>;
using VectorTermPtr = std::shared_ptr<const VectorTerm>;

struct IntTerm
{
  struct Const
  {
    Integer value;
  };
  struct Var
  {
    std::string name;
  };
  struct Add
  {
    IntTermPtr lhs, rhs;
  };
  /// Sugar; normalized into Add + Scale(-1, .).
  struct Sub
  {
    IntTermPtr lhs, rhs;
  };
  /// Multiplication by a literal constant.
  struct Scale
  {
    Integer factor;
    IntTermPtr term;
  };
  struct Read
  {
    std::string array;
    IntTermPtr index;
  };
  struct Len
  {
    std::string array;
  };
  /// The `*` placeholder: replaced by a fresh unconstrained variable.
  struct Wildcard
  {
  };

  using Node = std::variant<Const, Var, Add, Sub, Scale, Read, Len, Wildcard>;
  Node node;
  SourceSpan span;
};

struct ArrayTerm
{
  struct Var
  {
    std::string name;
  };
  struct Write
  {
    std::string base;
    IntTermPtr index;
    IntTermPtr value;
  };

  using Node = std::variant<Var, Write>;
  Node node;
  SourceSpan span;
};

/// Implicit variables a guard may constrain: e, i, c_k, s.
struct ImplicitVar
{
  enum class Kind
  {
    Elem,
    Index,
    Counter,
    State
  };
  Kind kind;
  int counter = 0;  // 1-based, Counter only

  static ImplicitVar elem() { return {Kind::Elem, 0}; }
  static ImplicitVar index() { return {Kind::Index, 0}; }
  static ImplicitVar ctr(int k) { return {Kind::Counter, k}; }
  static ImplicitVar state() { return {Kind::State, 0}; }
  bool operator==(const ImplicitVar &) const = default;
};

std::string to_string(const ImplicitVar &v);

struct GuardAtom
{
  ImplicitVar lhs;
  Cmp cmp;
  IntTermPtr rhs;  // literal constant when lhs is the state
  SourceSpan span;
};

struct UpdateAtom
{
  struct CtrAdd
  {
    int counter;  // 1-based
    Integer delta;
  };
  struct SetState
  {
    Integer state;
  };
  struct Skip
  {
  };
  struct Break
  {
  };

  using Node = std::variant<CtrAdd, SetState, Skip, Break>;
  Node node;
  SourceSpan span;
};

struct Branch
{
  std::vector<GuardAtom> guard;  // conjunction; empty means true
  std::vector<UpdateAtom> updates;
  SourceSpan span;

  bool has_break() const;
  std::optional<Integer> target_state() const;
  /// Net increment of counter k (1-based) applied by this branch.
  Integer delta(int k) const;
};

struct FoldFunction
{
  int arity = 1;  // m: index plus m-1 counters
  std::vector<Branch> branches;
};

struct VectorTerm
{
  struct Tuple
  {
    std::vector<IntTermPtr> items;
  };
  struct Fold
  {
    std::string array;
    VectorTermPtr init;
    FoldFunction fn;
  };

  using Node = std::variant<Tuple, Fold>;
  Node node;
  SourceSpan span;

  int arity() const;
};

struct BoolTerm
{
  struct Const
  {
    bool value;
  };
  struct ArrayEq
  {
    ArrayTermPtr lhs, rhs;
  };
  struct IntCmp
  {
    Cmp cmp;
    IntTermPtr lhs, rhs;
  };
  struct Not
  {
    BoolTermPtr arg;
  };
  struct And
  {
    BoolTermPtr lhs, rhs;
  };
  struct Or
  {
    BoolTermPtr lhs, rhs;
  };
  struct Implies
  {
    BoolTermPtr lhs, rhs;
  };
  struct VecEq
  {
    VectorTermPtr lhs, rhs;
  };

  using Node =
      std::variant<Const, ArrayEq, IntCmp, Not, And, Or, Implies, VecEq>;
  Node node;
  SourceSpan span;
};

/// An AFL formula: a conjunction of assertions over declared variables.
/// Values are immutable once built and may be shared across threads.
struct Formula
{
  std::vector<BoolTermPtr> assertions;
  std::map<std::string, Sort> decls;

  std::optional<Sort> sort_of(const std::string &name) const;
};

// Structural equality; source spans are ignored.
bool equal(const IntTerm &a, const IntTerm &b);
bool equal(const ArrayTerm &a, const ArrayTerm &b);
bool equal(const BoolTerm &a, const BoolTerm &b);
bool equal(const VectorTerm &a, const VectorTerm &b);
bool equal(const GuardAtom &a, const GuardAtom &b);
bool equal(const UpdateAtom &a, const UpdateAtom &b);
bool equal(const FoldFunction &a, const FoldFunction &b);
bool equal(const Formula &a, const Formula &b);

/// Node constructors.
namespace mk {
IntTermPtr num(Integer v, SourceSpan span = {});
IntTermPtr var(std::string name, SourceSpan span = {});
IntTermPtr add(IntTermPtr a, IntTermPtr b, SourceSpan span = {});
IntTermPtr sub(IntTermPtr a, IntTermPtr b, SourceSpan span = {});
IntTermPtr scale(Integer factor, IntTermPtr t, SourceSpan span = {});
IntTermPtr read(std::string array, IntTermPtr index, SourceSpan span = {});
IntTermPtr len(std::string array, SourceSpan span = {});
IntTermPtr wildcard(SourceSpan span = {});

ArrayTermPtr avar(std::string name, SourceSpan span = {});
ArrayTermPtr write(std::string base,
                   IntTermPtr index,
                   IntTermPtr value,
                   SourceSpan span = {});

BoolTermPtr boolean(bool v, SourceSpan span = {});
BoolTermPtr array_eq(ArrayTermPtr a, ArrayTermPtr b, SourceSpan span = {});
BoolTermPtr cmp(Cmp op, IntTermPtr a, IntTermPtr b, SourceSpan span = {});
BoolTermPtr eq(IntTermPtr a, IntTermPtr b, SourceSpan span = {});
BoolTermPtr lt(IntTermPtr a, IntTermPtr b, SourceSpan span = {});
BoolTermPtr lnot(BoolTermPtr a, SourceSpan span = {});
BoolTermPtr land(BoolTermPtr a, BoolTermPtr b, SourceSpan span = {});
BoolTermPtr lor(BoolTermPtr a, BoolTermPtr b, SourceSpan span = {});
BoolTermPtr implies(BoolTermPtr a, BoolTermPtr b, SourceSpan span = {});
BoolTermPtr vec_eq(VectorTermPtr a, VectorTermPtr b, SourceSpan span = {});
/// Left-nested conjunction; `true` for an empty list.
BoolTermPtr conj(const std::vector<BoolTermPtr> &items);

VectorTermPtr tuple(std::vector<IntTermPtr> items, SourceSpan span = {});
VectorTermPtr fold(std::string array,
                   VectorTermPtr init,
                   FoldFunction fn,
                   SourceSpan span = {});

GuardAtom guard(ImplicitVar lhs, Cmp cmp, IntTermPtr rhs);
UpdateAtom inc(int counter, Integer delta);
UpdateAtom set_state(Integer state);
UpdateAtom skip();
UpdateAtom brk();
}  // namespace mk

/// Flattens nested And nodes into a list of conjuncts.
void flatten_and(const BoolTermPtr &t, std::vector<BoolTermPtr> &out);

/// Free integer variables / array names occurring in a term (fold implicit
/// variables are not terms and never appear here).
void collect_int_vars(const IntTerm &t, std::set<std::string> &out);
void collect_vars(const BoolTerm &t,
                  std::set<std::string> &ints,
                  std::set<std::string> &arrays);
void collect_vars(const VectorTerm &t,
                  std::set<std::string> &ints,
                  std::set<std::string> &arrays);
void collect_vars(const IntTerm &t,
                  std::set<std::string> &ints,
                  std::set<std::string> &arrays);

bool contains_fold(const BoolTerm &t);
/// Number of fold terms (including nested ones) in a formula.
std::size_t count_folds(const Formula &f);

/// |phi|: Boolean connectives and atoms plus fold branches.
std::size_t formula_size(const Formula &f);

// ---------------------------------------------------------------------------
// Well-formedness

struct WellFormednessError
{
  enum class Kind
  {
    DuplicateUpdate,
    ArityMismatch,
    StateGuardNotConstant,
    NegativeState,
    CounterOutOfRange,
    UndeclaredVariable,
    SortMismatch,
    MalformedGuard
  };
  Kind kind;
  std::string message;
  SourceSpan span;
};

std::string to_string(WellFormednessError::Kind kind);

/// Syntactic well-formedness checks; returns every violation found. Guard
/// exclusivity and SCC monotonicity are semantic and checked elsewhere.
std::vector<WellFormednessError> validate(const Formula &f);

}  // namespace afl
