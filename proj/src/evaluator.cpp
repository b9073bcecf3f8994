#include "afl/evaluator.h"

#include <algorithm>
#include <functional>
#include <set>

namespace afl {

EvalError::EvalError(Kind kind, std::string message, SourceSpan span)
    : AflException(std::move(message)), kind_(kind), span_(span)
{
}

std::string to_string(EvalError::Kind kind)
{
  switch (kind) {
    case EvalError::Kind::OutOfBoundsRead: return "OutOfBoundsRead";
    case EvalError::Kind::OutOfBoundsWrite: return "OutOfBoundsWrite";
    case EvalError::Kind::GuardOverlap: return "GuardOverlap";
    case EvalError::Kind::UnboundVariable: return "UnboundVariable";
    case EvalError::Kind::Overflow: return "Overflow";
    case EvalError::Kind::NotNormalized: return "NotNormalized";
  }
  return "?";
}

namespace {

const std::vector<Integer> &lookup_array(const std::string &name,
                                         const Interpretation &sigma,
                                         SourceSpan span)
{
  auto it = sigma.arrays.find(name);
  if (it == sigma.arrays.end()) {
    throw EvalError(EvalError::Kind::UnboundVariable,
                    "array '" + name + "' has no value", span);
  }
  return it->second;
}

template <typename F>
Integer arith(F &&f, SourceSpan span)
{
  try {
    return f();
  } catch (const OverflowError &e) {
    throw EvalError(EvalError::Kind::Overflow, e.what(), span);
  }
}

}  // namespace

Integer eval_int(const IntTerm &t, const Interpretation &sigma)
{
  return std::visit(
      [&](const auto &x) -> Integer {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntTerm::Const>) {
          return x.value;
        } else if constexpr (std::is_same_v<T, IntTerm::Var>) {
          auto it = sigma.ints.find(x.name);
          if (it == sigma.ints.end()) {
            throw EvalError(EvalError::Kind::UnboundVariable,
                            "variable '" + x.name + "' has no value", t.span);
          }
          return it->second;
        } else if constexpr (std::is_same_v<T, IntTerm::Add>) {
          Integer a = eval_int(*x.lhs, sigma);
          Integer b = eval_int(*x.rhs, sigma);
          return arith([&] { return checked_add(a, b); }, t.span);
        } else if constexpr (std::is_same_v<T, IntTerm::Sub>) {
          Integer a = eval_int(*x.lhs, sigma);
          Integer b = eval_int(*x.rhs, sigma);
          return arith([&] { return checked_sub(a, b); }, t.span);
        } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
          Integer a = eval_int(*x.term, sigma);
          return arith([&] { return checked_mul(x.factor, a); }, t.span);
        } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
          const auto &a = lookup_array(x.array, sigma, t.span);
          Integer idx = eval_int(*x.index, sigma);
          if (idx < 0 || idx >= static_cast<Integer>(a.size())) {
            throw EvalError(EvalError::Kind::OutOfBoundsRead,
                            "read " + x.array + "[" + std::to_string(idx)
                                + "] outside length "
                                + std::to_string(a.size()),
                            t.span);
          }
          return a[static_cast<std::size_t>(idx)];
        } else if constexpr (std::is_same_v<T, IntTerm::Len>) {
          return static_cast<Integer>(lookup_array(x.array, sigma, t.span)
                                          .size());
        } else {
          throw EvalError(EvalError::Kind::NotNormalized,
                          "wildcard must be normalized before evaluation",
                          t.span);
        }
      },
      t.node);
}

std::vector<Integer> eval_array(const ArrayTerm &t,
                                const Interpretation &sigma)
{
  if (auto v = std::get_if<ArrayTerm::Var>(&t.node)) {
    return lookup_array(v->name, sigma, t.span);
  }
  const auto &w = std::get<ArrayTerm::Write>(t.node);
  std::vector<Integer> a = lookup_array(w.base, sigma, t.span);
  Integer idx = eval_int(*w.index, sigma);
  Integer val = eval_int(*w.value, sigma);
  if (idx < 0 || idx >= static_cast<Integer>(a.size())) {
    throw EvalError(EvalError::Kind::OutOfBoundsWrite,
                    "write " + w.base + "[" + std::to_string(idx)
                        + "] outside length " + std::to_string(a.size()),
                    t.span);
  }
  a[static_cast<std::size_t>(idx)] = val;
  return a;
}

std::vector<Integer> eval_fold(const std::vector<Integer> &a,
                               const std::vector<Integer> &init,
                               const FoldFunction &fn,
                               const Interpretation &sigma)
{
  // Guard terms do not depend on the fold context, so they are fixed values.
  std::vector<std::vector<Integer>> rhs(fn.branches.size());
  for (std::size_t b = 0; b < fn.branches.size(); ++b) {
    for (const auto &g : fn.branches[b].guard) {
      rhs[b].push_back(eval_int(*g.rhs, sigma));
    }
  }

  std::vector<Integer> v = init;
  Integer s = 0;
  const auto len = static_cast<Integer>(a.size());
  while (true) {
    Integer i = v[0];
    if (i < 0 || i >= len) {
      return v;
    }
    Integer e = a[static_cast<std::size_t>(i)];
    const Branch *enabled = nullptr;
    for (std::size_t b = 0; b < fn.branches.size(); ++b) {
      const Branch &br = fn.branches[b];
      bool holds = true;
      for (std::size_t j = 0; j < br.guard.size() && holds; ++j) {
        const GuardAtom &g = br.guard[j];
        Integer lhs = 0;
        switch (g.lhs.kind) {
          case ImplicitVar::Kind::Elem: lhs = e; break;
          case ImplicitVar::Kind::Index: lhs = i; break;
          case ImplicitVar::Kind::State: lhs = s; break;
          case ImplicitVar::Kind::Counter: lhs = v.at(g.lhs.counter); break;
        }
        holds = compare(lhs, g.cmp, rhs[b][j]);
      }
      if (!holds) {
        continue;
      }
      if (enabled) {
        throw EvalError(EvalError::Kind::GuardOverlap,
                        "two branches are enabled at index "
                            + std::to_string(i),
                        br.span);
      }
      enabled = &br;
    }
    if (!enabled || enabled->has_break()) {
      return v;
    }
    for (const auto &u : enabled->updates) {
      if (auto c = std::get_if<UpdateAtom::CtrAdd>(&u.node)) {
        Integer &slot = v.at(c->counter);
        slot = arith([&] { return checked_add(slot, c->delta); }, u.span);
      } else if (auto st = std::get_if<UpdateAtom::SetState>(&u.node)) {
        s = st->state;
      }
    }
    v[0] = i + 1;
  }
}

std::vector<Integer> eval_vector(const VectorTerm &t,
                                 const Interpretation &sigma)
{
  if (auto tup = std::get_if<VectorTerm::Tuple>(&t.node)) {
    std::vector<Integer> out;
    out.reserve(tup->items.size());
    for (const auto &item : tup->items) {
      out.push_back(eval_int(*item, sigma));
    }
    return out;
  }
  const auto &fold = std::get<VectorTerm::Fold>(t.node);
  auto init = eval_vector(*fold.init, sigma);
  const auto &a = lookup_array(fold.array, sigma, t.span);
  return eval_fold(a, init, fold.fn, sigma);
}

bool eval_bool(const BoolTerm &t, const Interpretation &sigma)
{
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BoolTerm::Const>) {
          return x.value;
        } else if constexpr (std::is_same_v<T, BoolTerm::ArrayEq>) {
          auto a = eval_array(*x.lhs, sigma);
          auto b = eval_array(*x.rhs, sigma);
          return a == b;
        } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
          Integer a = eval_int(*x.lhs, sigma);
          Integer b = eval_int(*x.rhs, sigma);
          return compare(a, x.cmp, b);
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          return !eval_bool(*x.arg, sigma);
        } else if constexpr (std::is_same_v<T, BoolTerm::And>) {
          bool a = eval_bool(*x.lhs, sigma);
          bool b = eval_bool(*x.rhs, sigma);
          return a && b;
        } else if constexpr (std::is_same_v<T, BoolTerm::Or>) {
          bool a = eval_bool(*x.lhs, sigma);
          bool b = eval_bool(*x.rhs, sigma);
          return a || b;
        } else if constexpr (std::is_same_v<T, BoolTerm::Implies>) {
          bool a = eval_bool(*x.lhs, sigma);
          bool b = eval_bool(*x.rhs, sigma);
          return !a || b;
        } else {
          return eval_vector(*x.lhs, sigma) == eval_vector(*x.rhs, sigma);
        }
      },
      t.node);
}

bool eval_formula(const Formula &f, const Interpretation &sigma)
{
  bool result = true;
  for (const auto &a : f.assertions) {
    result = eval_bool(*a, sigma) && result;
  }
  return result;
}

bool satisfies(const Formula &f, const Interpretation &sigma)
{
  try {
    return eval_formula(f, sigma);
  } catch (const EvalError &) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Brute force

namespace {

struct Definition
{
  enum class Kind
  {
    Int,
    Vec,
    Array
  };
  Kind kind;
  std::vector<std::string> targets;
  std::set<std::string> deps;  // integer and array names alike
  BoolTermPtr conjunct;
  IntTermPtr int_def;               // Int
  std::vector<int> vec_slots;       // Vec: tuple slot of each target
  VectorTermPtr vec_def;            // Vec
  ArrayTermPtr array_def;           // Array
  bool covers_conjunct = true;
  int stage = -1;
};

std::set<std::string> vars_of(const IntTerm &t)
{
  std::set<std::string> ints, arrays;
  collect_vars(t, ints, arrays);
  ints.insert(arrays.begin(), arrays.end());
  return ints;
}

std::set<std::string> vars_of(const VectorTerm &t)
{
  std::set<std::string> ints, arrays;
  collect_vars(t, ints, arrays);
  ints.insert(arrays.begin(), arrays.end());
  return ints;
}

std::set<std::string> vars_of(const BoolTerm &t)
{
  std::set<std::string> ints, arrays;
  collect_vars(t, ints, arrays);
  ints.insert(arrays.begin(), arrays.end());
  return ints;
}

std::set<std::string> vars_of(const ArrayTerm &t)
{
  std::set<std::string> out;
  if (auto v = std::get_if<ArrayTerm::Var>(&t.node)) {
    out.insert(v->name);
  } else {
    const auto &w = std::get<ArrayTerm::Write>(t.node);
    out.insert(w.base);
    auto a = vars_of(*w.index);
    auto b = vars_of(*w.value);
    out.insert(a.begin(), a.end());
    out.insert(b.begin(), b.end());
  }
  return out;
}

std::optional<Definition> as_definition(const BoolTermPtr &c)
{
  Definition d;
  d.conjunct = c;
  if (auto cmp = std::get_if<BoolTerm::IntCmp>(&c->node)) {
    if (cmp->cmp != Cmp::Eq) {
      return std::nullopt;
    }
    for (int side = 0; side < 2; ++side) {
      const auto &lhs = side == 0 ? cmp->lhs : cmp->rhs;
      const auto &rhs = side == 0 ? cmp->rhs : cmp->lhs;
      if (auto v = std::get_if<IntTerm::Var>(&lhs->node)) {
        auto deps = vars_of(*rhs);
        if (!deps.count(v->name)) {
          d.kind = Definition::Kind::Int;
          d.targets = {v->name};
          d.deps = std::move(deps);
          d.int_def = rhs;
          return d;
        }
      }
    }
    return std::nullopt;
  }
  if (auto ve = std::get_if<BoolTerm::VecEq>(&c->node)) {
    for (int side = 0; side < 2; ++side) {
      const auto &lhs = side == 0 ? ve->lhs : ve->rhs;
      const auto &rhs = side == 0 ? ve->rhs : ve->lhs;
      auto tup = std::get_if<VectorTerm::Tuple>(&lhs->node);
      if (!tup || !std::holds_alternative<VectorTerm::Fold>(rhs->node)) {
        continue;
      }
      auto deps = vars_of(*rhs);
      std::set<std::string> seen;
      d.kind = Definition::Kind::Vec;
      d.vec_def = rhs;
      for (std::size_t k = 0; k < tup->items.size(); ++k) {
        auto v = std::get_if<IntTerm::Var>(&tup->items[k]->node);
        if (v && !deps.count(v->name) && seen.insert(v->name).second) {
          d.targets.push_back(v->name);
          d.vec_slots.push_back(static_cast<int>(k));
        } else {
          d.covers_conjunct = false;
        }
      }
      if (d.targets.empty()) {
        continue;
      }
      d.deps = std::move(deps);
      return d;
    }
    return std::nullopt;
  }
  if (auto ae = std::get_if<BoolTerm::ArrayEq>(&c->node)) {
    for (int side = 0; side < 2; ++side) {
      const auto &lhs = side == 0 ? ae->lhs : ae->rhs;
      const auto &rhs = side == 0 ? ae->rhs : ae->lhs;
      auto v = std::get_if<ArrayTerm::Var>(&lhs->node);
      if (!v) {
        continue;
      }
      auto deps = vars_of(*rhs);
      if (deps.count(v->name)) {
        continue;
      }
      d.kind = Definition::Kind::Array;
      d.targets = {v->name};
      d.deps = std::move(deps);
      d.array_def = rhs;
      return d;
    }
  }
  return std::nullopt;
}

class BruteForce
{
public:
  BruteForce(const Formula &f, const BruteForceBounds &bounds)
      : f_(f), bounds_(bounds)
  {
  }

  BruteForceResult run()
  {
    plan();
    BruteForceResult r;
    bool found = search(0);
    r.nodes = nodes_;
    if (found) {
      r.status = BruteForceResult::Status::Sat;
      r.model = sigma_;
    } else {
      r.status = BruteForceResult::Status::UnsatWithinBounds;
    }
    return r;
  }

private:
  struct Check
  {
    BoolTermPtr conjunct;
  };

  bool reaches(const std::string &from, const std::string &target,
               std::set<std::string> &seen) const
  {
    if (from == target) {
      return true;
    }
    if (!seen.insert(from).second) {
      return false;
    }
    auto it = defined_by_.find(from);
    if (it == defined_by_.end()) {
      return false;
    }
    for (const auto &d : defs_[it->second].deps) {
      if (reaches(d, target, seen)) {
        return true;
      }
    }
    return false;
  }

  int stage_of(const std::string &var)
  {
    auto pos = enum_pos_.find(var);
    if (pos != enum_pos_.end()) {
      return pos->second;
    }
    auto memo = stage_memo_.find(var);
    if (memo != stage_memo_.end()) {
      return memo->second;
    }
    int s = defs_[defined_by_.at(var)].stage;
    stage_memo_[var] = s;
    return s;
  }

  int stage_of(const std::set<std::string> &vars)
  {
    int s = -1;
    for (const auto &v : vars) {
      s = std::max(s, stage_of(v));
    }
    return s;
  }

  void plan()
  {
    std::vector<BoolTermPtr> conjuncts;
    for (const auto &a : f_.assertions) {
      flatten_and(a, conjuncts);
    }

    std::vector<bool> covered(conjuncts.size(), false);
    for (std::size_t c = 0; c < conjuncts.size(); ++c) {
      auto d = as_definition(conjuncts[c]);
      if (!d) {
        continue;
      }
      // Keep only the targets not yet defined and not creating a cycle.
      bool ok = true;
      for (const auto &t : d->targets) {
        if (defined_by_.count(t)) {
          ok = false;
        }
        for (const auto &dep : d->deps) {
          std::set<std::string> seen;
          if (reaches(dep, t, seen)) {
            ok = false;
          }
        }
      }
      if (!ok) {
        continue;
      }
      for (const auto &t : d->targets) {
        defined_by_[t] = defs_.size();
      }
      covered[c] = d->covers_conjunct;
      defs_.push_back(std::move(*d));
    }

    order_enumeration(conjuncts, covered);

    // Topological order of definitions, then bucket by stage.
    std::vector<int> state(defs_.size(), 0);
    std::vector<std::size_t> order;
    std::function<void(std::size_t)> visit = [&](std::size_t d) {
      if (state[d]) {
        return;
      }
      state[d] = 1;
      for (const auto &dep : defs_[d].deps) {
        auto it = defined_by_.find(dep);
        if (it != defined_by_.end()) {
          visit(it->second);
        }
      }
      order.push_back(d);
    };
    for (std::size_t d = 0; d < defs_.size(); ++d) {
      visit(d);
    }
    const int n = static_cast<int>(enumerated_.size());
    defs_at_.assign(n + 1, {});
    checks_at_.assign(n + 1, {});
    for (std::size_t d : order) {
      defs_[d].stage = stage_of(defs_[d].deps);
      defs_at_[defs_[d].stage + 1].push_back(d);
    }
    for (std::size_t c = 0; c < conjuncts.size(); ++c) {
      if (!covered[c]) {
        int s = stage_of(vars_of(*conjuncts[c]));
        checks_at_[s + 1].push_back(conjuncts[c]);
      }
    }
  }

  double domain_size(const std::string &var) const
  {
    if (f_.decls.at(var) == Sort::Int) {
      return static_cast<double>(bounds_.int_max - bounds_.int_min + 1);
    }
    const double cells = static_cast<double>(bounds_.value_max - bounds_.value_min + 1);
    double total = 0, arrays = 1;
    for (int len = 0; len <= bounds_.max_len; ++len, arrays *= cells) {
      total += arrays;
    }
    return total;
  }

  // Free variables a set of variables ultimately depends on.
  void base_vars(const std::string &var, std::set<std::string> &out,
                 std::set<std::string> &seen) const
  {
    if (!seen.insert(var).second) {
      return;
    }
    auto it = defined_by_.find(var);
    if (it == defined_by_.end()) {
      if (f_.decls.count(var)) {
        out.insert(var);
      }
      return;
    }
    for (const auto &d : defs_[it->second].deps) {
      base_vars(d, out, seen);
    }
  }

  // Greedy order: repeatedly fix the free variables of the unchecked conjunct
  // that is cheapest to close.
  void order_enumeration(const std::vector<BoolTermPtr> &conjuncts,
                         const std::vector<bool> &covered)
  {
    std::vector<std::set<std::string>> needs;
    for (std::size_t c = 0; c < conjuncts.size(); ++c) {
      if (covered[c]) {
        continue;
      }
      std::set<std::string> base, seen;
      for (const auto &v : vars_of(*conjuncts[c])) {
        base_vars(v, base, seen);
      }
      needs.push_back(std::move(base));
    }
    auto fix = [&](const std::string &name) {
      if (!enum_pos_.count(name)) {
        enum_pos_[name] = static_cast<int>(enumerated_.size());
        enumerated_.push_back(name);
      }
    };
    std::vector<bool> closed(needs.size(), false);
    while (true) {
      std::size_t best = needs.size();
      double best_cost = 0;
      for (std::size_t c = 0; c < needs.size(); ++c) {
        if (closed[c]) {
          continue;
        }
        double cost = 1;
        for (const auto &v : needs[c]) {
          if (!enum_pos_.count(v)) {
            cost *= domain_size(v);
          }
        }
        if (best == needs.size() || cost < best_cost) {
          best = c;
          best_cost = cost;
        }
      }
      if (best == needs.size()) {
        break;
      }
      for (Sort sort : {Sort::Int, Sort::Array}) {
        for (const auto &v : needs[best]) {
          if (f_.decls.at(v) == sort) {
            fix(v);
          }
        }
      }
      closed[best] = true;
    }
    for (Sort sort : {Sort::Array, Sort::Int}) {
      for (const auto &[name, s] : f_.decls) {
        if (s == sort && !defined_by_.count(name)) {
          fix(name);
        }
      }
    }
  }

  bool apply(const Definition &d)
  {
    switch (d.kind) {
      case Definition::Kind::Int:
        sigma_.ints[d.targets[0]] = eval_int(*d.int_def, sigma_);
        return true;
      case Definition::Kind::Vec: {
        auto v = eval_vector(*d.vec_def, sigma_);
        for (std::size_t k = 0; k < d.targets.size(); ++k) {
          sigma_.ints[d.targets[k]] = v[static_cast<std::size_t>(
              d.vec_slots[k])];
        }
        return true;
      }
      case Definition::Kind::Array:
        sigma_.arrays[d.targets[0]] = eval_array(*d.array_def, sigma_);
        return true;
    }
    return false;
  }

  // Applies the definitions and checks of one stage (index into *_at_).
  bool settle(std::size_t stage)
  {
    try {
      for (std::size_t d : defs_at_[stage]) {
        apply(defs_[d]);
      }
      for (const auto &c : checks_at_[stage]) {
        if (!eval_bool(*c, sigma_)) {
          return false;
        }
      }
    } catch (const EvalError &) {
      return false;
    }
    return true;
  }

  void tick()
  {
    if (++nodes_ > bounds_.node_budget) {
      throw BudgetExceeded("brute-force search exceeded "
                           + std::to_string(bounds_.node_budget) + " nodes");
    }
  }

  bool search(std::size_t k)
  {
    if (k == 0 && !settle(0)) {
      return false;
    }
    if (k == enumerated_.size()) {
      return true;
    }
    const std::string &name = enumerated_[k];
    if (f_.decls.at(name) == Sort::Int) {
      for (Integer v = bounds_.int_min; v <= bounds_.int_max; ++v) {
        tick();
        sigma_.ints[name] = v;
        if (settle(k + 1) && search(k + 1)) {
          return true;
        }
      }
      return false;
    }
    for (int len = 0; len <= bounds_.max_len; ++len) {
      std::vector<Integer> cells(static_cast<std::size_t>(len),
                                 bounds_.value_min);
      while (true) {
        tick();
        sigma_.arrays[name] = cells;
        if (settle(k + 1) && search(k + 1)) {
          return true;
        }
        // Odometer step, last cell fastest.
        int pos = len - 1;
        while (pos >= 0 && cells[pos] == bounds_.value_max) {
          cells[pos] = bounds_.value_min;
          --pos;
        }
        if (pos < 0) {
          break;
        }
        ++cells[pos];
      }
    }
    return false;
  }

  const Formula &f_;
  BruteForceBounds bounds_;
  std::vector<Definition> defs_;
  std::map<std::string, std::size_t> defined_by_;
  std::vector<std::string> enumerated_;
  std::map<std::string, int> enum_pos_;
  std::map<std::string, int> stage_memo_;
  std::vector<std::vector<std::size_t>> defs_at_;
  std::vector<std::vector<BoolTermPtr>> checks_at_;
  Interpretation sigma_;
  std::uint64_t nodes_ = 0;
};

}  // namespace

BruteForceResult brute_force_sat(const Formula &f,
                                 const BruteForceBounds &bounds)
{
  return BruteForce(f, bounds).run();
}

}  // namespace afl
