#include "afl/normalize.h"

namespace afl {

namespace {

class Normalizer
{
public:
  explicit Normalizer(const Formula &f) : in_(f)
  {
    out_.decls = f.decls;
  }

  Formula run()
  {
    for (const auto &a : in_.assertions) {
      // Hoisted definitions are appended after the assertion that needs them.
      auto main = boolean(*a);
      out_.assertions.push_back(main);
      for (auto &h : pending_) {
        out_.assertions.push_back(h);
      }
      pending_.clear();
    }
    return std::move(out_);
  }

private:
  std::string fresh(const char *prefix, Sort sort)
  {
    std::string name;
    do {
      name = prefix + std::to_string(++counter_);
    } while (out_.decls.count(name));
    out_.decls.emplace(name, sort);
    return name;
  }

  IntTermPtr integer(const IntTermPtr &t)
  {
    return std::visit(
        [&](const auto &x) -> IntTermPtr {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, IntTerm::Add>) {
            return mk::add(integer(x.lhs), integer(x.rhs), t->span);
          } else if constexpr (std::is_same_v<T, IntTerm::Sub>) {
            return mk::add(integer(x.lhs), mk::scale(-1, integer(x.rhs)),
                           t->span);
          } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
            return mk::scale(x.factor, integer(x.term), t->span);
          } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
            return mk::read(x.array, integer(x.index), t->span);
          } else if constexpr (std::is_same_v<T, IntTerm::Wildcard>) {
            return mk::var(fresh(kWildcardPrefix, Sort::Int), t->span);
          } else {
            return t;
          }
        },
        t->node);
  }

  static BoolTermPtr negate(BoolTermPtr b, SourceSpan span)
  {
    if (auto n = std::get_if<BoolTerm::Not>(&b->node)) {
      return n->arg;
    }
    return mk::lnot(std::move(b), span);
  }

  static BoolTermPtr truth(SourceSpan span)
  {
    return mk::eq(mk::num(0, span), mk::num(0, span), span);
  }

  GuardAtom guard_atom(const GuardAtom &g)
  {
    GuardAtom out = g;
    if (g.lhs.kind == ImplicitVar::Kind::State) {
      Integer n = std::get<IntTerm::Const>(g.rhs->node).value;
      if (g.cmp == Cmp::Le) {
        out.cmp = Cmp::Lt;
        out.rhs = mk::num(checked_add(n, 1), g.rhs->span);
      } else if (g.cmp == Cmp::Ge) {
        out.cmp = Cmp::Gt;
        out.rhs = mk::num(checked_sub(n, 1), g.rhs->span);
      }
      return out;
    }
    out.rhs = integer(g.rhs);
    if (g.cmp == Cmp::Le) {
      out.cmp = Cmp::Lt;
      out.rhs = mk::add(out.rhs, mk::num(1), g.rhs->span);
    } else if (g.cmp == Cmp::Ge) {
      out.cmp = Cmp::Gt;
      out.rhs = mk::add(out.rhs, mk::num(-1), g.rhs->span);
    }
    return out;
  }

  FoldFunction function(const FoldFunction &fn)
  {
    FoldFunction out;
    out.arity = fn.arity;
    for (const auto &br : fn.branches) {
      Branch nb;
      nb.span = br.span;
      nb.updates = br.updates;
      for (const auto &g : br.guard) {
        nb.guard.push_back(guard_atom(g));
      }
      out.branches.push_back(std::move(nb));
    }
    return out;
  }

  // A fold's initial vector must be a tuple; nested folds are bound to fresh
  // integer variables by a separate top-level vector equality.
  VectorTermPtr vector(const VectorTermPtr &v, bool nested)
  {
    if (auto t = std::get_if<VectorTerm::Tuple>(&v->node)) {
      std::vector<IntTermPtr> items;
      for (const auto &item : t->items) {
        items.push_back(integer(item));
      }
      return mk::tuple(std::move(items), v->span);
    }
    const auto &fold = std::get<VectorTerm::Fold>(v->node);
    auto init = vector(fold.init, true);
    auto result = mk::fold(fold.array, init, function(fold.fn), v->span);
    if (!nested) {
      return result;
    }
    std::vector<IntTermPtr> vars;
    for (int k = 0; k < fold.fn.arity; ++k) {
      vars.push_back(mk::var(fresh(kHoistPrefix, Sort::Int), v->span));
    }
    auto tuple = mk::tuple(vars, v->span);
    pending_.push_back(mk::vec_eq(tuple, result, v->span));
    return tuple;
  }

  ArrayTermPtr array(const ArrayTermPtr &a)
  {
    if (auto w = std::get_if<ArrayTerm::Write>(&a->node)) {
      return mk::write(w->base, integer(w->index), integer(w->value), a->span);
    }
    return a;
  }

  BoolTermPtr boolean(const BoolTerm &b)
  {
    const SourceSpan span = b.span;
    return std::visit(
        [&](const auto &x) -> BoolTermPtr {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, BoolTerm::Const>) {
            return x.value ? truth(span) : mk::lnot(truth(span), span);
          } else if constexpr (std::is_same_v<T, BoolTerm::ArrayEq>) {
            auto lhs = array(x.lhs);
            auto rhs = array(x.rhs);
            if (std::holds_alternative<ArrayTerm::Write>(lhs->node)
                && std::holds_alternative<ArrayTerm::Write>(rhs->node)) {
              auto z = mk::avar(fresh(kArrayHoistPrefix, Sort::Array), span);
              pending_.push_back(mk::array_eq(z, lhs, span));
              lhs = z;
            }
            return mk::array_eq(lhs, rhs, span);
          } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
            auto l = integer(x.lhs);
            auto r = integer(x.rhs);
            switch (x.cmp) {
              case Cmp::Eq: return mk::eq(l, r, span);
              case Cmp::Lt: return mk::lt(l, r, span);
              case Cmp::Gt: return mk::lt(r, l, span);
              case Cmp::Ne: return mk::lnot(mk::eq(l, r, span), span);
              case Cmp::Le: return mk::lt(l, mk::add(r, mk::num(1)), span);
              case Cmp::Ge: return mk::lnot(mk::lt(l, r, span), span);
            }
            return nullptr;
          } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
            return negate(boolean(*x.arg), span);
          } else if constexpr (std::is_same_v<T, BoolTerm::And>) {
            return mk::land(boolean(*x.lhs), boolean(*x.rhs), span);
          } else if constexpr (std::is_same_v<T, BoolTerm::Or>) {
            return negate(mk::land(negate(boolean(*x.lhs), span),
                                   negate(boolean(*x.rhs), span), span),
                          span);
          } else if constexpr (std::is_same_v<T, BoolTerm::Implies>) {
            return negate(mk::land(boolean(*x.lhs),
                                   negate(boolean(*x.rhs), span), span),
                          span);
          } else {
            return mk::vec_eq(vector(x.lhs, false), vector(x.rhs, false),
                              span);
          }
        },
        b.node);
  }

  const Formula &in_;
  Formula out_;
  std::vector<BoolTermPtr> pending_;
  int counter_ = 0;
};

bool int_normalized(const IntTerm &t)
{
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntTerm::Add>) {
          return int_normalized(*x.lhs) && int_normalized(*x.rhs);
        } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
          return int_normalized(*x.term);
        } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
          return int_normalized(*x.index);
        } else {
          return !std::is_same_v<T, IntTerm::Sub>
                 && !std::is_same_v<T, IntTerm::Wildcard>;
        }
      },
      t.node);
}

bool vector_normalized(const VectorTerm &v, bool nested)
{
  if (auto t = std::get_if<VectorTerm::Tuple>(&v.node)) {
    for (const auto &item : t->items) {
      if (!int_normalized(*item)) {
        return false;
      }
    }
    return true;
  }
  if (nested) {
    return false;
  }
  const auto &fold = std::get<VectorTerm::Fold>(v.node);
  for (const auto &br : fold.fn.branches) {
    for (const auto &g : br.guard) {
      if (g.cmp == Cmp::Le || g.cmp == Cmp::Ge || !int_normalized(*g.rhs)) {
        return false;
      }
    }
  }
  return vector_normalized(*fold.init, true);
}

bool bool_normalized(const BoolTerm &b)
{
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BoolTerm::ArrayEq>) {
          return !(std::holds_alternative<ArrayTerm::Write>(x.lhs->node)
                   && std::holds_alternative<ArrayTerm::Write>(x.rhs->node));
        } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
          return (x.cmp == Cmp::Eq || x.cmp == Cmp::Lt)
                 && int_normalized(*x.lhs) && int_normalized(*x.rhs);
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          return !std::holds_alternative<BoolTerm::Not>(x.arg->node)
                 && bool_normalized(*x.arg);
        } else if constexpr (std::is_same_v<T, BoolTerm::And>) {
          return bool_normalized(*x.lhs) && bool_normalized(*x.rhs);
        } else if constexpr (std::is_same_v<T, BoolTerm::VecEq>) {
          return vector_normalized(*x.lhs, false)
                 && vector_normalized(*x.rhs, false);
        } else {
          return false;
        }
      },
      b.node);
}

}  // namespace

Formula normalize(const Formula &f)
{
  return Normalizer(f).run();
}

bool is_normalized(const Formula &f)
{
  for (const auto &a : f.assertions) {
    if (!bool_normalized(*a)) {
      return false;
    }
  }
  return true;
}

}  // namespace afl
