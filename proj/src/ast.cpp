#include "afl/ast.h"

#include <cassert>

namespace afl {

std::string SourceSpan::to_string() const
{
  if (!valid()) {
    return "<unknown>";
  }
  return std::to_string(line) + ":" + std::to_string(column);
}

std::string to_string(Sort sort)
{
  return sort == Sort::Array ? "array" : "int";
}

std::string to_string(Cmp cmp)
{
  switch (cmp) {
    case Cmp::Lt: return "<";
    case Cmp::Gt: return ">";
    case Cmp::Eq: return "=";
    case Cmp::Ne: return "distinct";
    case Cmp::Le: return "<=";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

Cmp negate(Cmp cmp)
{
  switch (cmp) {
    case Cmp::Lt: return Cmp::Ge;
    case Cmp::Gt: return Cmp::Le;
    case Cmp::Eq: return Cmp::Ne;
    case Cmp::Ne: return Cmp::Eq;
    case Cmp::Le: return Cmp::Gt;
    case Cmp::Ge: return Cmp::Lt;
  }
  return cmp;
}

Cmp flip(Cmp cmp)
{
  switch (cmp) {
    case Cmp::Lt: return Cmp::Gt;
    case Cmp::Gt: return Cmp::Lt;
    case Cmp::Le: return Cmp::Ge;
    case Cmp::Ge: return Cmp::Le;
    default: return cmp;
  }
}

bool compare(Integer lhs, Cmp cmp, Integer rhs)
{
  switch (cmp) {
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Gt: return lhs > rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ne: return lhs != rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Ge: return lhs >= rhs;
  }
  return false;
}

std::string to_string(const ImplicitVar &v)
{
  switch (v.kind) {
    case ImplicitVar::Kind::Elem: return "e";
    case ImplicitVar::Kind::Index: return "i";
    case ImplicitVar::Kind::State: return "s";
    case ImplicitVar::Kind::Counter: return "c" + std::to_string(v.counter);
  }
  return "?";
}

bool Branch::has_break() const
{
  for (const auto &u : updates) {
    if (std::holds_alternative<UpdateAtom::Break>(u.node)) {
      return true;
    }
  }
  return false;
}

std::optional<Integer> Branch::target_state() const
{
  for (const auto &u : updates) {
    if (auto s = std::get_if<UpdateAtom::SetState>(&u.node)) {
      return s->state;
    }
  }
  return std::nullopt;
}

Integer Branch::delta(int k) const
{
  Integer d = 0;
  for (const auto &u : updates) {
    if (auto c = std::get_if<UpdateAtom::CtrAdd>(&u.node)) {
      if (c->counter == k) {
        d = checked_add(d, c->delta);
      }
    }
  }
  return d;
}

int VectorTerm::arity() const
{
  if (auto t = std::get_if<Tuple>(&node)) {
    return static_cast<int>(t->items.size());
  }
  return std::get<Fold>(node).fn.arity;
}

std::optional<Sort> Formula::sort_of(const std::string &name) const
{
  auto it = decls.find(name);
  if (it == decls.end()) {
    return std::nullopt;
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Structural equality

namespace {

template <typename T>
bool ptr_equal(const std::shared_ptr<const T> &a,
               const std::shared_ptr<const T> &b)
{
  if (!a || !b) {
    return !a && !b;
  }
  return a == b || equal(*a, *b);
}

}  // namespace

bool equal(const IntTerm &a, const IntTerm &b)
{
  if (a.node.index() != b.node.index()) {
    return false;
  }
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto &y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, IntTerm::Const>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, IntTerm::Var>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, IntTerm::Add>
                             || std::is_same_v<T, IntTerm::Sub>) {
          return ptr_equal(x.lhs, y.lhs) && ptr_equal(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
          return x.factor == y.factor && ptr_equal(x.term, y.term);
        } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
          return x.array == y.array && ptr_equal(x.index, y.index);
        } else if constexpr (std::is_same_v<T, IntTerm::Len>) {
          return x.array == y.array;
        } else {
          return true;
        }
      },
      a.node);
}

bool equal(const ArrayTerm &a, const ArrayTerm &b)
{
  if (a.node.index() != b.node.index()) {
    return false;
  }
  if (auto x = std::get_if<ArrayTerm::Var>(&a.node)) {
    return x->name == std::get<ArrayTerm::Var>(b.node).name;
  }
  const auto &x = std::get<ArrayTerm::Write>(a.node);
  const auto &y = std::get<ArrayTerm::Write>(b.node);
  return x.base == y.base && ptr_equal(x.index, y.index)
         && ptr_equal(x.value, y.value);
}

bool equal(const GuardAtom &a, const GuardAtom &b)
{
  return a.lhs == b.lhs && a.cmp == b.cmp && ptr_equal(a.rhs, b.rhs);
}

bool equal(const UpdateAtom &a, const UpdateAtom &b)
{
  if (a.node.index() != b.node.index()) {
    return false;
  }
  if (auto x = std::get_if<UpdateAtom::CtrAdd>(&a.node)) {
    const auto &y = std::get<UpdateAtom::CtrAdd>(b.node);
    return x->counter == y.counter && x->delta == y.delta;
  }
  if (auto x = std::get_if<UpdateAtom::SetState>(&a.node)) {
    return x->state == std::get<UpdateAtom::SetState>(b.node).state;
  }
  return true;
}

bool equal(const FoldFunction &a, const FoldFunction &b)
{
  if (a.arity != b.arity || a.branches.size() != b.branches.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    const auto &x = a.branches[i];
    const auto &y = b.branches[i];
    if (x.guard.size() != y.guard.size()
        || x.updates.size() != y.updates.size()) {
      return false;
    }
    for (std::size_t j = 0; j < x.guard.size(); ++j) {
      if (!equal(x.guard[j], y.guard[j])) {
        return false;
      }
    }
    for (std::size_t j = 0; j < x.updates.size(); ++j) {
      if (!equal(x.updates[j], y.updates[j])) {
        return false;
      }
    }
  }
  return true;
}

bool equal(const VectorTerm &a, const VectorTerm &b)
{
  if (a.node.index() != b.node.index()) {
    return false;
  }
  if (auto x = std::get_if<VectorTerm::Tuple>(&a.node)) {
    const auto &y = std::get<VectorTerm::Tuple>(b.node);
    if (x->items.size() != y.items.size()) {
      return false;
    }
    for (std::size_t i = 0; i < x->items.size(); ++i) {
      if (!ptr_equal(x->items[i], y.items[i])) {
        return false;
      }
    }
    return true;
  }
  const auto &x = std::get<VectorTerm::Fold>(a.node);
  const auto &y = std::get<VectorTerm::Fold>(b.node);
  return x.array == y.array && ptr_equal(x.init, y.init) && equal(x.fn, y.fn);
}

bool equal(const BoolTerm &a, const BoolTerm &b)
{
  if (a.node.index() != b.node.index()) {
    return false;
  }
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto &y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, BoolTerm::Const>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
          return x.cmp == y.cmp && ptr_equal(x.lhs, y.lhs)
                 && ptr_equal(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          return ptr_equal(x.arg, y.arg);
        } else {
          return ptr_equal(x.lhs, y.lhs) && ptr_equal(x.rhs, y.rhs);
        }
      },
      a.node);
}

bool equal(const Formula &a, const Formula &b)
{
  if (a.decls != b.decls || a.assertions.size() != b.assertions.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.assertions.size(); ++i) {
    if (!ptr_equal(a.assertions[i], b.assertions[i])) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Constructors

namespace mk {

namespace {
IntTermPtr int_node(IntTerm::Node n, SourceSpan span)
{
  return std::make_shared<const IntTerm>(IntTerm{std::move(n), span});
}
BoolTermPtr bool_node(BoolTerm::Node n, SourceSpan span)
{
  return std::make_shared<const BoolTerm>(BoolTerm{std::move(n), span});
}
}  // namespace

IntTermPtr num(Integer v, SourceSpan span)
{
  return int_node(IntTerm::Const{v}, span);
}
IntTermPtr var(std::string name, SourceSpan span)
{
  return int_node(IntTerm::Var{std::move(name)}, span);
}
IntTermPtr add(IntTermPtr a, IntTermPtr b, SourceSpan span)
{
  return int_node(IntTerm::Add{std::move(a), std::move(b)}, span);
}
IntTermPtr sub(IntTermPtr a, IntTermPtr b, SourceSpan span)
{
  return int_node(IntTerm::Sub{std::move(a), std::move(b)}, span);
}
IntTermPtr scale(Integer factor, IntTermPtr t, SourceSpan span)
{
  return int_node(IntTerm::Scale{factor, std::move(t)}, span);
}
IntTermPtr read(std::string array, IntTermPtr index, SourceSpan span)
{
  return int_node(IntTerm::Read{std::move(array), std::move(index)}, span);
}
IntTermPtr len(std::string array, SourceSpan span)
{
  return int_node(IntTerm::Len{std::move(array)}, span);
}
IntTermPtr wildcard(SourceSpan span)
{
  return int_node(IntTerm::Wildcard{}, span);
}

ArrayTermPtr avar(std::string name, SourceSpan span)
{
  return std::make_shared<const ArrayTerm>(
      ArrayTerm{ArrayTerm::Var{std::move(name)}, span});
}
ArrayTermPtr write(std::string base,
                   IntTermPtr index,
                   IntTermPtr value,
                   SourceSpan span)
{
  return std::make_shared<const ArrayTerm>(ArrayTerm{
      ArrayTerm::Write{std::move(base), std::move(index), std::move(value)},
      span});
}

BoolTermPtr boolean(bool v, SourceSpan span)
{
  return bool_node(BoolTerm::Const{v}, span);
}
BoolTermPtr array_eq(ArrayTermPtr a, ArrayTermPtr b, SourceSpan span)
{
  return bool_node(BoolTerm::ArrayEq{std::move(a), std::move(b)}, span);
}
BoolTermPtr cmp(Cmp op, IntTermPtr a, IntTermPtr b, SourceSpan span)
{
  return bool_node(BoolTerm::IntCmp{op, std::move(a), std::move(b)}, span);
}
BoolTermPtr eq(IntTermPtr a, IntTermPtr b, SourceSpan span)
{
  return cmp(Cmp::Eq, std::move(a), std::move(b), span);
}
BoolTermPtr lt(IntTermPtr a, IntTermPtr b, SourceSpan span)
{
  return cmp(Cmp::Lt, std::move(a), std::move(b), span);
}
BoolTermPtr lnot(BoolTermPtr a, SourceSpan span)
{
  return bool_node(BoolTerm::Not{std::move(a)}, span);
}
BoolTermPtr land(BoolTermPtr a, BoolTermPtr b, SourceSpan span)
{
  return bool_node(BoolTerm::And{std::move(a), std::move(b)}, span);
}
BoolTermPtr lor(BoolTermPtr a, BoolTermPtr b, SourceSpan span)
{
  return bool_node(BoolTerm::Or{std::move(a), std::move(b)}, span);
}
BoolTermPtr implies(BoolTermPtr a, BoolTermPtr b, SourceSpan span)
{
  return bool_node(BoolTerm::Implies{std::move(a), std::move(b)}, span);
}
BoolTermPtr vec_eq(VectorTermPtr a, VectorTermPtr b, SourceSpan span)
{
  return bool_node(BoolTerm::VecEq{std::move(a), std::move(b)}, span);
}
BoolTermPtr conj(const std::vector<BoolTermPtr> &items)
{
  if (items.empty()) {
    return boolean(true);
  }
  BoolTermPtr acc = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) {
    acc = land(acc, items[i]);
  }
  return acc;
}

VectorTermPtr tuple(std::vector<IntTermPtr> items, SourceSpan span)
{
  return std::make_shared<const VectorTerm>(
      VectorTerm{VectorTerm::Tuple{std::move(items)}, span});
}
VectorTermPtr fold(std::string array,
                   VectorTermPtr init,
                   FoldFunction fn,
                   SourceSpan span)
{
  return std::make_shared<const VectorTerm>(VectorTerm{
      VectorTerm::Fold{std::move(array), std::move(init), std::move(fn)},
      span});
}

GuardAtom guard(ImplicitVar lhs, Cmp cmp, IntTermPtr rhs)
{
  return GuardAtom{lhs, cmp, std::move(rhs), {}};
}
UpdateAtom inc(int counter, Integer delta)
{
  return UpdateAtom{UpdateAtom::CtrAdd{counter, delta}, {}};
}
UpdateAtom set_state(Integer state)
{
  return UpdateAtom{UpdateAtom::SetState{state}, {}};
}
UpdateAtom skip() { return UpdateAtom{UpdateAtom::Skip{}, {}}; }
UpdateAtom brk() { return UpdateAtom{UpdateAtom::Break{}, {}}; }

}  // namespace mk

// ---------------------------------------------------------------------------
// Traversals

void flatten_and(const BoolTermPtr &t, std::vector<BoolTermPtr> &out)
{
  if (auto a = std::get_if<BoolTerm::And>(&t->node)) {
    flatten_and(a->lhs, out);
    flatten_and(a->rhs, out);
  } else {
    out.push_back(t);
  }
}

void collect_vars(const IntTerm &t,
                  std::set<std::string> &ints,
                  std::set<std::string> &arrays)
{
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntTerm::Var>) {
          ints.insert(x.name);
        } else if constexpr (std::is_same_v<T, IntTerm::Add>
                             || std::is_same_v<T, IntTerm::Sub>) {
          collect_vars(*x.lhs, ints, arrays);
          collect_vars(*x.rhs, ints, arrays);
        } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
          collect_vars(*x.term, ints, arrays);
        } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
          arrays.insert(x.array);
          collect_vars(*x.index, ints, arrays);
        } else if constexpr (std::is_same_v<T, IntTerm::Len>) {
          arrays.insert(x.array);
        }
      },
      t.node);
}

void collect_int_vars(const IntTerm &t, std::set<std::string> &out)
{
  std::set<std::string> arrays;
  collect_vars(t, out, arrays);
}

void collect_vars(const VectorTerm &t,
                  std::set<std::string> &ints,
                  std::set<std::string> &arrays)
{
  if (auto tup = std::get_if<VectorTerm::Tuple>(&t.node)) {
    for (const auto &item : tup->items) {
      collect_vars(*item, ints, arrays);
    }
    return;
  }
  const auto &fold = std::get<VectorTerm::Fold>(t.node);
  arrays.insert(fold.array);
  collect_vars(*fold.init, ints, arrays);
  for (const auto &br : fold.fn.branches) {
    for (const auto &g : br.guard) {
      collect_vars(*g.rhs, ints, arrays);
    }
  }
}

void collect_vars(const BoolTerm &t,
                  std::set<std::string> &ints,
                  std::set<std::string> &arrays)
{
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BoolTerm::ArrayEq>) {
          for (const auto *side : {&x.lhs, &x.rhs}) {
            if (auto v = std::get_if<ArrayTerm::Var>(&(*side)->node)) {
              arrays.insert(v->name);
            } else {
              const auto &w = std::get<ArrayTerm::Write>((*side)->node);
              arrays.insert(w.base);
              collect_vars(*w.index, ints, arrays);
              collect_vars(*w.value, ints, arrays);
            }
          }
        } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
          collect_vars(*x.lhs, ints, arrays);
          collect_vars(*x.rhs, ints, arrays);
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          collect_vars(*x.arg, ints, arrays);
        } else if constexpr (std::is_same_v<T, BoolTerm::Const>) {
        } else {
          collect_vars(*x.lhs, ints, arrays);
          collect_vars(*x.rhs, ints, arrays);
        }
      },
      t.node);
}

namespace {

std::size_t vector_folds(const VectorTerm &v)
{
  if (auto f = std::get_if<VectorTerm::Fold>(&v.node)) {
    return 1 + vector_folds(*f->init);
  }
  return 0;
}

std::size_t bool_folds(const BoolTerm &t)
{
  return std::visit(
      [&](const auto &x) -> std::size_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BoolTerm::VecEq>) {
          return vector_folds(*x.lhs) + vector_folds(*x.rhs);
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          return bool_folds(*x.arg);
        } else if constexpr (std::is_same_v<T, BoolTerm::And>
                             || std::is_same_v<T, BoolTerm::Or>
                             || std::is_same_v<T, BoolTerm::Implies>) {
          return bool_folds(*x.lhs) + bool_folds(*x.rhs);
        } else {
          return 0;
        }
      },
      t.node);
}

std::size_t vector_branches(const VectorTerm &v)
{
  if (auto f = std::get_if<VectorTerm::Fold>(&v.node)) {
    return f->fn.branches.size() + vector_branches(*f->init);
  }
  return 0;
}

std::size_t bool_size(const BoolTerm &t)
{
  return std::visit(
      [&](const auto &x) -> std::size_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BoolTerm::VecEq>) {
          return 1 + vector_branches(*x.lhs) + vector_branches(*x.rhs);
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          return 1 + bool_size(*x.arg);
        } else if constexpr (std::is_same_v<T, BoolTerm::And>
                             || std::is_same_v<T, BoolTerm::Or>
                             || std::is_same_v<T, BoolTerm::Implies>) {
          return 1 + bool_size(*x.lhs) + bool_size(*x.rhs);
        } else {
          return 1;
        }
      },
      t.node);
}

}  // namespace

bool contains_fold(const BoolTerm &t) { return bool_folds(t) > 0; }

std::size_t count_folds(const Formula &f)
{
  std::size_t n = 0;
  for (const auto &a : f.assertions) {
    n += bool_folds(*a);
  }
  return n;
}

std::size_t formula_size(const Formula &f)
{
  std::size_t n = 0;
  for (const auto &a : f.assertions) {
    n += bool_size(*a);
  }
  // Separate assertions are joined by an implicit conjunction.
  if (f.assertions.size() > 1) {
    n += f.assertions.size() - 1;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Well-formedness

std::string to_string(WellFormednessError::Kind kind)
{
  using K = WellFormednessError::Kind;
  switch (kind) {
    case K::DuplicateUpdate: return "DuplicateUpdate";
    case K::ArityMismatch: return "ArityMismatch";
    case K::StateGuardNotConstant: return "StateGuardNotConstant";
    case K::NegativeState: return "NegativeState";
    case K::CounterOutOfRange: return "CounterOutOfRange";
    case K::UndeclaredVariable: return "UndeclaredVariable";
    case K::SortMismatch: return "SortMismatch";
    case K::MalformedGuard: return "MalformedGuard";
  }
  return "?";
}

namespace {

class Validator
{
public:
  explicit Validator(const Formula &f) : f_(f) {}

  std::vector<WellFormednessError> run()
  {
    for (const auto &a : f_.assertions) {
      check(*a);
    }
    return std::move(errors_);
  }

private:
  using K = WellFormednessError::Kind;

  void report(K kind, std::string msg, SourceSpan span)
  {
    errors_.push_back({kind, std::move(msg), span});
  }

  void expect_sort(const std::string &name, Sort sort, SourceSpan span)
  {
    auto s = f_.sort_of(name);
    if (!s) {
      report(K::UndeclaredVariable, "undeclared variable '" + name + "'",
             span);
    } else if (*s != sort) {
      report(K::SortMismatch,
             "'" + name + "' is declared as " + to_string(*s)
                 + " but used as " + to_string(sort),
             span);
    }
  }

  void check(const IntTerm &t)
  {
    std::visit(
        [&](const auto &x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, IntTerm::Var>) {
            expect_sort(x.name, Sort::Int, t.span);
          } else if constexpr (std::is_same_v<T, IntTerm::Add>
                               || std::is_same_v<T, IntTerm::Sub>) {
            check(*x.lhs);
            check(*x.rhs);
          } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
            check(*x.term);
          } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
            expect_sort(x.array, Sort::Array, t.span);
            check(*x.index);
          } else if constexpr (std::is_same_v<T, IntTerm::Len>) {
            expect_sort(x.array, Sort::Array, t.span);
          }
        },
        t.node);
  }

  void check(const ArrayTerm &t)
  {
    if (auto v = std::get_if<ArrayTerm::Var>(&t.node)) {
      expect_sort(v->name, Sort::Array, t.span);
      return;
    }
    const auto &w = std::get<ArrayTerm::Write>(t.node);
    expect_sort(w.base, Sort::Array, t.span);
    check(*w.index);
    check(*w.value);
  }

  void check(const FoldFunction &fn, SourceSpan span)
  {
    const int m = fn.arity;
    if (m < 1) {
      report(K::ArityMismatch, "fold arity must be at least 1", span);
    }
    for (const auto &br : fn.branches) {
      for (const auto &g : br.guard) {
        if (!g.rhs) {
          report(K::MalformedGuard, "guard without right-hand side", g.span);
          continue;
        }
        if (g.lhs.kind == ImplicitVar::Kind::Counter
            && (g.lhs.counter < 1 || g.lhs.counter > m - 1)) {
          report(K::CounterOutOfRange,
                 "counter c" + std::to_string(g.lhs.counter)
                     + " out of range for arity " + std::to_string(m),
                 g.span);
        }
        if (g.lhs.kind == ImplicitVar::Kind::State
            && !std::holds_alternative<IntTerm::Const>(g.rhs->node)) {
          report(K::StateGuardNotConstant,
                 "state guard must compare s with a literal", g.span);
        }
        check(*g.rhs);
      }
      std::set<int> counters;
      int states = 0;
      for (const auto &u : br.updates) {
        if (auto c = std::get_if<UpdateAtom::CtrAdd>(&u.node)) {
          if (c->counter < 1 || c->counter > m - 1) {
            report(K::CounterOutOfRange,
                   "counter c" + std::to_string(c->counter)
                       + " out of range for arity " + std::to_string(m),
                   u.span);
          }
          if (!counters.insert(c->counter).second) {
            report(K::DuplicateUpdate,
                   "c" + std::to_string(c->counter)
                       + " is updated more than once in one branch",
                   u.span.valid() ? u.span : br.span);
          }
        } else if (auto s = std::get_if<UpdateAtom::SetState>(&u.node)) {
          if (s->state < 0) {
            report(K::NegativeState, "state constants must be non-negative",
                   u.span);
          }
          if (++states == 2) {
            report(K::DuplicateUpdate,
                   "s is updated more than once in one branch",
                   u.span.valid() ? u.span : br.span);
          }
        }
      }
    }
  }

  void check(const VectorTerm &v)
  {
    if (auto t = std::get_if<VectorTerm::Tuple>(&v.node)) {
      if (t->items.empty()) {
        report(K::ArityMismatch, "empty vector", v.span);
      }
      for (const auto &item : t->items) {
        check(*item);
      }
      return;
    }
    const auto &fold = std::get<VectorTerm::Fold>(v.node);
    expect_sort(fold.array, Sort::Array, v.span);
    check(*fold.init);
    if (fold.init->arity() != fold.fn.arity) {
      report(K::ArityMismatch,
             "fold of arity " + std::to_string(fold.fn.arity)
                 + " has initial vector of arity "
                 + std::to_string(fold.init->arity()),
             v.span);
    }
    check(fold.fn, v.span);
  }

  void check(const BoolTerm &t)
  {
    std::visit(
        [&](const auto &x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, BoolTerm::ArrayEq>) {
            check(*x.lhs);
            check(*x.rhs);
          } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
            check(*x.lhs);
            check(*x.rhs);
          } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
            check(*x.arg);
          } else if constexpr (std::is_same_v<T, BoolTerm::VecEq>) {
            check(*x.lhs);
            check(*x.rhs);
            if (x.lhs->arity() != x.rhs->arity()) {
              report(K::ArityMismatch,
                     "vector equality between arities "
                         + std::to_string(x.lhs->arity()) + " and "
                         + std::to_string(x.rhs->arity()),
                     t.span);
            }
          } else if constexpr (!std::is_same_v<T, BoolTerm::Const>) {
            check(*x.lhs);
            check(*x.rhs);
          }
        },
        t.node);
  }

  const Formula &f_;
  std::vector<WellFormednessError> errors_;
};

}  // namespace

std::vector<WellFormednessError> validate(const Formula &f)
{
  return Validator(f).run();
}

}  // namespace afl
