#include "afl/encoder.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>

#include "afl/cfg.h"
#include "afl/parser.h"

namespace afl {

namespace {

struct UnionFind
{
  std::vector<std::size_t> parent;

  explicit UnionFind(std::size_t n) : parent(n)
  {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x)
  {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
};

LinearTerm var(const std::string &name) { return LinearTerm::var(name); }

template <typename T>
std::size_t index_of(std::vector<T> &items, const T &item)
{
  auto it = std::find(items.begin(), items.end(), item);
  if (it != items.end()) {
    return static_cast<std::size_t>(it - items.begin());
  }
  items.push_back(item);
  return items.size() - 1;
}

/// Translation of guard terms for the exclusivity check: reads and lengths
/// become placeholders.
class GuardTermTranslator
{
public:
  explicit GuardTermTranslator(LiaFormula &out) : out_(out) {}

  LinearTerm term(const IntTerm &t)
  {
    return std::visit(
        [&](const auto &n) -> LinearTerm {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, IntTerm::Const>) {
            return LinearTerm(n.value);
          } else if constexpr (std::is_same_v<N, IntTerm::Var>) {
            out_.declare(n.name);
            return var(n.name);
          } else if constexpr (std::is_same_v<N, IntTerm::Add>) {
            return term(*n.lhs) + term(*n.rhs);
          } else if constexpr (std::is_same_v<N, IntTerm::Sub>) {
            return term(*n.lhs) - term(*n.rhs);
          } else if constexpr (std::is_same_v<N, IntTerm::Scale>) {
            return term(*n.term) * n.factor;
          } else if constexpr (std::is_same_v<N, IntTerm::Read>) {
            std::string name = "#x.rd." + n.array + "." + print(*n.index);
            out_.declare(name);
            return var(name);
          } else if constexpr (std::is_same_v<N, IntTerm::Len>) {
            std::string name = "#x.len." + n.array;
            out_.declare(name);
            if (lengths_.insert(name).second) {
              out_.add(lia::ge(var(name), 0));
            }
            return var(name);
          } else {
            throw EncodeError("wildcard in a guard of a normalized formula");
          }
        },
        t.node);
  }

private:
  LiaFormula &out_;
  std::set<std::string> lengths_;
};

std::string implicit_name(const ImplicitVar &v)
{
  switch (v.kind) {
    case ImplicitVar::Kind::Elem: return "#x.e";
    case ImplicitVar::Kind::Index: return "#x.i";
    case ImplicitVar::Kind::Counter: return "#x.c" + std::to_string(v.counter);
    case ImplicitVar::Kind::State: return "#x.s";
  }
  return "#x.?";
}

LiaPtr compare_terms(Cmp cmp, LinearTerm a, LinearTerm b)
{
  switch (cmp) {
    case Cmp::Lt: return lia::lt(std::move(a), std::move(b));
    case Cmp::Gt: return lia::gt(std::move(a), std::move(b));
    case Cmp::Eq: return lia::eq(std::move(a), std::move(b));
    case Cmp::Ne: return lia::ne(std::move(a), std::move(b));
    case Cmp::Le: return lia::le(std::move(a), std::move(b));
    case Cmp::Ge: return lia::ge(std::move(a), std::move(b));
  }
  return lia::falsity();
}

}  // namespace

// ---------------------------------------------------------------------------
// Guard exclusivity

ExclusivityResult check_guard_exclusivity(const FoldFunction &fn,
                                          const SolverConfig &cfg)
{
  ExclusivityResult result;
  const ControlFlowGraph g = build_cfg(fn);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (Integer s : g.states) {
    std::vector<std::size_t> enabled;
    for (std::size_t b = 0; b < fn.branches.size(); ++b) {
      if (state_guard_holds(fn.branches[b], s)) {
        enabled.push_back(b);
      }
    }
    for (std::size_t x = 0; x < enabled.size(); ++x) {
      for (std::size_t y = x + 1; y < enabled.size(); ++y) {
        pairs.insert({enabled[x], enabled[y]});
      }
    }
  }

  LiaFormula query;
  GuardTermTranslator tr(query);
  auto guard_formula = [&](const Branch &br, Cube &cube) {
    std::vector<LiaPtr> atoms;
    for (const auto &a : br.guard) {
      if (a.lhs.kind == ImplicitVar::Kind::State) {
        continue;
      }
      std::string subject = implicit_name(a.lhs);
      query.declare(subject);
      LinearTerm rhs = tr.term(*a.rhs);
      atoms.push_back(compare_terms(a.cmp, var(subject), rhs));
      ScmAtom sa;
      sa.kind = a.lhs.kind == ImplicitVar::Kind::Elem ? ScmAtom::Kind::Input
                                                      : ScmAtom::Kind::Counter;
      sa.index = a.lhs.kind == ImplicitVar::Kind::Counter ? a.lhs.counter : 0;
      sa.cmp = a.cmp;
      sa.rhs = rhs;
      cube.push_back(sa);
    }
    return lia::land(atoms);
  };

  std::vector<std::pair<std::size_t, std::size_t>> open;
  std::vector<LiaPtr> overlaps;
  for (const auto &[x, y] : pairs) {
    Cube cx, cy;
    LiaPtr fx = guard_formula(fn.branches[x], cx);
    LiaPtr fy = guard_formula(fn.branches[y], cy);
    Cube both = cx;
    both.insert(both.end(), cy.begin(), cy.end());
    if (!cube_consistent(both)) {
      continue;
    }
    open.push_back({x, y});
    overlaps.push_back(lia::land(fx, fy));
  }
  if (open.empty()) {
    return result;
  }
  query.add(lia::lor(overlaps));
  result.used_solver = true;
  LiaResult r = solve_lia(query, cfg);
  if (r.status == LiaResult::Status::Unsat) {
    return result;
  }
  if (r.status == LiaResult::Status::Unknown) {
    throw EncodeError("cannot decide guard exclusivity: " + r.reason);
  }
  result.exclusive = false;
  result.witness = r.model;
  for (std::size_t k = 0; k < open.size(); ++k) {
    if (eval_lia(overlaps[k], r.model)) {
      result.first = open[k].first;
      result.second = open[k].second;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Arrays

ArrayGroups preprocess_arrays(const Formula &f)
{
  ArrayGroups out;
  std::vector<std::string> names;
  std::map<std::string, std::size_t> id;
  for (const auto &[name, sort] : f.decls) {
    if (sort == Sort::Array) {
      id[name] = names.size();
      names.push_back(name);
    }
  }
  auto lookup = [&](const std::string &name) {
    auto it = id.find(name);
    if (it == id.end()) {
      throw EncodeError("undeclared array " + name);
    }
    return it->second;
  };

  struct PendingLink
  {
    std::size_t target, base;
    IntTermPtr index, value;
  };
  std::vector<PendingLink> pending;
  UnionFind same(names.size());
  std::vector<BoolTermPtr> conjuncts;
  for (const auto &a : f.assertions) {
    flatten_and(a, conjuncts);
  }
  for (const auto &c : conjuncts) {
    const auto *eq = std::get_if<BoolTerm::ArrayEq>(&c->node);
    if (!eq) {
      out.rest.push_back(c);
      continue;
    }
    const auto *lv = std::get_if<ArrayTerm::Var>(&eq->lhs->node);
    const auto *rv = std::get_if<ArrayTerm::Var>(&eq->rhs->node);
    if (lv && rv) {
      same.unite(lookup(lv->name), lookup(rv->name));
      continue;
    }
    if (!lv && !rv) {
      throw EncodeError("equality between two array writes");
    }
    const auto &target = lv ? lv->name : rv->name;
    const auto &w = std::get<ArrayTerm::Write>((lv ? eq->rhs : eq->lhs)->node);
    pending.push_back({lookup(target), lookup(w.base), w.index, w.value});
  }

  std::map<std::size_t, std::size_t> class_of_root;
  for (std::size_t n = 0; n < names.size(); ++n) {
    std::size_t root = same.find(n);
    auto [it, fresh] = class_of_root.try_emplace(root, out.classes.size());
    if (fresh) {
      out.classes.emplace_back();
    }
    out.classes[it->second].push_back(names[n]);
    out.class_of[names[n]] = it->second;
  }
  UnionFind linked(out.classes.size());
  for (const auto &p : pending) {
    WriteLink l{out.class_of[names[p.target]], out.class_of[names[p.base]],
                p.index, p.value};
    linked.unite(l.target, l.base);
    out.links.push_back(std::move(l));
  }
  std::map<std::size_t, std::size_t> group_of_root;
  out.group_of_class.resize(out.classes.size());
  for (std::size_t c = 0; c < out.classes.size(); ++c) {
    auto [it, fresh] = group_of_root.try_emplace(linked.find(c), out.groups.size());
    if (fresh) {
      out.groups.emplace_back();
    }
    out.groups[it->second].push_back(c);
    out.group_of_class[c] = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regions

namespace {

std::string infix(const LinearTerm &t)
{
  std::string out;
  for (const auto &[name, c] : t.coeffs()) {
    if (!out.empty()) {
      out += c < 0 ? " - " : " + ";
    } else if (c < 0) {
      out += "-";
    }
    const Integer a = c < 0 ? -c : c;
    out += a == 1 ? name : std::to_string(a) + "*" + name;
  }
  if (out.empty()) {
    return std::to_string(t.constant());
  }
  if (t.constant() != 0) {
    out += t.constant() < 0 ? " - " : " + ";
    out += std::to_string(t.constant() < 0 ? -t.constant() : t.constant());
  }
  return out;
}

}  // namespace

std::vector<std::string> RegionSystem::regions(std::size_t subject) const
{
  const auto &bs = subjects[subject].boundaries;
  if (bs.empty()) {
    return {"(-inf, +inf)"};
  }
  std::vector<std::string> out;
  out.push_back("(-inf, " + infix(bs.front() - 1) + "]");
  for (std::size_t k = 0; k < bs.size(); ++k) {
    out.push_back("[" + infix(bs[k]) + ", " + infix(bs[k]) + "]");
    if (k + 1 < bs.size()) {
      out.push_back("[" + infix(bs[k] + 1) + ", "
                    + infix(bs[k + 1] - 1) + "]");
    }
  }
  out.push_back("[" + infix(bs.back() + 1) + ", +inf)");
  return out;
}

RegionSystem build_regions(const Scm &machine)
{
  RegionSystem rs;
  for (const auto &name : machine.counters) {
    rs.subjects.push_back({name, {}});
  }
  for (const auto &t : machine.transitions) {
    for (const auto &a : t.guard) {
      if (a.kind == ScmAtom::Kind::Counter) {
        auto &bs = rs.subjects.at(static_cast<std::size_t>(a.index)).boundaries;
        index_of(bs, a.rhs);
      }
    }
  }
  for (auto &s : rs.subjects) {
    std::sort(s.boundaries.begin(), s.boundaries.end());
  }
  return rs;
}

std::size_t estimated_mode_bound(std::size_t reversals,
                             std::size_t counters,
                             std::size_t regions)
{
  return std::max<std::size_t>(1, reversals * counters * regions);
}

std::size_t layer_bound(std::size_t position_boundaries,
                        const std::vector<std::pair<int, std::size_t>>
                            &reversals_and_boundaries)
{
  std::size_t n = 1 + 2 * position_boundaries;
  for (const auto &[r, b] : reversals_and_boundaries) {
    const auto rr = static_cast<std::size_t>(r);
    n += (rr + 1) * 2 * b + rr;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Parikh images

ParikhVars encode_parikh(const Nfa &nfa,
                         const std::string &prefix,
                         LiaFormula &out)
{
  ParikhVars v;
  std::vector<std::vector<std::size_t>> in(nfa.states), outgoing(nfa.states);
  for (std::size_t e = 0; e < nfa.edges.size(); ++e) {
    v.counts.push_back(out.declare(prefix + "n" + std::to_string(e)));
    out.add(lia::ge(var(v.counts.back()), 0));
    in[nfa.edges[e].to].push_back(e);
    outgoing[nfa.edges[e].from].push_back(e);
  }
  std::vector<LinearTerm> sink_of(nfa.states);
  LinearTerm sinks;
  for (std::size_t k = 0; k < nfa.accepting.size(); ++k) {
    v.sinks.push_back(out.declare(prefix + "f" + std::to_string(k)));
    out.add(lia::between(0, var(v.sinks.back()), 1));
    sink_of[nfa.accepting[k]] += var(v.sinks.back());
    sinks += var(v.sinks.back());
  }
  out.add(lia::eq(sinks, 1));
  for (std::size_t q = 0; q < nfa.states; ++q) {
    v.depth.push_back(out.declare(prefix + "d" + std::to_string(q)));
  }

  for (std::size_t q = 0; q < nfa.states; ++q) {
    LinearTerm balance(q == nfa.init ? 1 : 0);
    for (std::size_t e : in[q]) {
      balance += var(v.counts[e]);
    }
    for (std::size_t e : outgoing[q]) {
      balance -= var(v.counts[e]);
    }
    out.add(lia::eq(balance, sink_of[q]));

    const LinearTerm z = var(v.depth[q]);
    if (q == nfa.init) {
      out.add(lia::eq(z, 1));
      continue;
    }
    out.add(lia::ge(z, 0));
    std::vector<LiaPtr> reasons;
    for (std::size_t e : in[q]) {
      const std::size_t u = nfa.edges[e].from;
      if (u == q) {
        continue;
      }
      const LinearTerm zu = var(v.depth[u]);
      reasons.push_back(lia::land({lia::gt(var(v.counts[e]), 0), lia::gt(zu, 0),
                                   lia::eq(z, zu + 1)}));
    }
    out.add(lia::implies(lia::gt(z, 0), lia::lor(reasons)));
  }
  for (std::size_t e = 0; e < nfa.edges.size(); ++e) {
    const std::size_t u = nfa.edges[e].from;
    if (u != nfa.init) {
      out.add(lia::implies(lia::gt(var(v.counts[e]), 0),
                           lia::gt(var(v.depth[u]), 0)));
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Lockstep product

namespace {

bool several_states(const Scm &m)
{
  return m.states.size() > 2;
}

}  // namespace

LockstepMachine build_lockstep(std::vector<LockstepFold> folds,
                               std::size_t tracks)
{
  LockstepMachine lm;
  lm.tracks = tracks;
  lm.counter_owner.push_back({folds.size(), 0});
  std::vector<std::vector<int>> global(folds.size());
  for (std::size_t m = 0; m < folds.size(); ++m) {
    const std::size_t k = folds[m].machine.counters.size();
    global[m].assign(k, 0);
    for (std::size_t c = 1; c < k; ++c) {
      global[m][c] = static_cast<int>(lm.counter_owner.size());
      lm.counter_owner.push_back({m, c});
    }
  }
  std::vector<bool> multi(folds.size());
  std::vector<std::vector<std::vector<std::size_t>>> out(folds.size());
  for (std::size_t m = 0; m < folds.size(); ++m) {
    const Scm &sm = folds[m].machine;
    multi[m] = several_states(sm);
    out[m].resize(sm.states.size());
    for (std::size_t t = 0; t < sm.transitions.size(); ++t) {
      out[m][sm.transitions[t].from].push_back(t);
    }
  }

  std::map<std::vector<std::size_t>, std::size_t> state_id;
  std::deque<std::size_t> queue;
  auto intern = [&](const std::vector<std::size_t> &s) {
    auto [it, fresh] = state_id.try_emplace(s, lm.states.size());
    if (fresh) {
      lm.states.push_back(s);
      queue.push_back(it->second);
    }
    return it->second;
  };
  std::vector<std::size_t> init;
  for (const auto &f : folds) {
    init.push_back(f.machine.init);
  }
  lm.init = intern(init);

  using Key = std::tuple<std::size_t, std::size_t, std::vector<bool>,
                         std::vector<std::vector<Integer>>>;
  while (!queue.empty()) {
    const std::size_t from = queue.front();
    queue.pop_front();
    const std::vector<std::size_t> here = lm.states[from];
    std::map<Key, std::size_t> merged;
    std::vector<LockstepTransition::Move> moves(folds.size());
    std::vector<std::size_t> next = here;

    std::function<void(std::size_t, const Cube &)> choose =
        [&](std::size_t m, const Cube &cube) {
          if (m == folds.size()) {
            std::size_t to = intern(next);
            std::vector<bool> flags;
            std::vector<std::vector<Integer>> deltas;
            for (const auto &mv : moves) {
              flags.push_back(mv.stops);
              flags.push_back(mv.assumed_active);
              deltas.push_back(mv.delta);
            }
            Key key{from, to, flags, deltas};
            auto [it, fresh] = merged.try_emplace(key, lm.transitions.size());
            if (fresh) {
              lm.transitions.push_back({from, to, moves, {}});
            }
            auto &guard = lm.transitions[it->second].guard;
            if (std::find(guard.begin(), guard.end(), cube) == guard.end()) {
              guard.push_back(cube);
            }
            return;
          }
          const Scm &sm = folds[m].machine;
          for (std::size_t t : out[m][here[m]]) {
            const ScmTransition &tr = sm.transitions[t];
            Cube c = cube;
            for (ScmAtom a : tr.guard) {
              if (a.kind == ScmAtom::Kind::Counter) {
                a.index = global[m][static_cast<std::size_t>(a.index)];
              } else {
                a.index = static_cast<int>(folds[m].track);
              }
              if (std::find(c.begin(), c.end(), a) == c.end()) {
                c.push_back(std::move(a));
              }
            }
            if (!cube_consistent(c)) {
              continue;
            }
            auto &mv = moves[m];
            mv.stops = tr.stops;
            mv.delta.assign(tr.delta.begin() + 1, tr.delta.end());
            for (bool active : {true, false}) {
              if (!multi[m] && !active) {
                break;
              }
              if (multi[m] && active && tr.stops) {
                continue;
              }
              mv.assumed_active = multi[m] && active;
              next[m] = multi[m] && active ? tr.to : here[m];
              choose(m + 1, c);
            }
            next[m] = here[m];
          }
        };
    choose(0, {});
  }
  lm.folds = std::move(folds);
  return lm;
}

ModeGraph build_mode_graph(const LockstepMachine &machine, std::size_t copies)
{
  ModeGraph g;
  g.copies = copies;
  const std::size_t q = machine.states.size();
  g.nfa.states = q * copies;
  g.nfa.init = machine.init;
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t s = 0; s < q; ++s) {
      g.state_of.push_back({s, j});
    }
  }
  for (std::size_t s = 0; s < q; ++s) {
    g.nfa.accepting.push_back((copies - 1) * q + s);
  }
  auto add = [&](std::size_t from, std::size_t to, ModeGraph::EdgeKind kind,
                 std::size_t t, std::size_t layer) {
    g.nfa.edges.push_back({from, to, static_cast<int>(t)});
    g.kind.push_back(kind);
    g.transition.push_back(t);
    g.layer.push_back(layer);
  };
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t t = 0; t < machine.transitions.size(); ++t) {
      const auto &tr = machine.transitions[t];
      add(j * q + tr.from, j * q + tr.to, ModeGraph::EdgeKind::Stay, t, j);
      if (j + 1 < copies) {
        add(j * q + tr.from, (j + 1) * q + tr.to, ModeGraph::EdgeKind::Advance,
            t, j);
      }
    }
    if (j + 1 < copies) {
      for (std::size_t s = 0; s < q; ++s) {
        add(j * q + s, (j + 1) * q + s, ModeGraph::EdgeKind::Skip, 0, j);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

class Assembler
{
public:
  explicit Assembler(const Formula &f) : f_(f) {}

  Encoding run();

private:
  struct Read
  {
    std::size_t cls;
    LinearTerm index;
    std::string var;
  };
  struct FoldInfo
  {
    const VectorTerm::Fold *fold;
    std::size_t cls;
    std::vector<LinearTerm> init;
    std::vector<LinearTerm> outputs;
    Scm machine;
  };
  struct Link
  {
    std::size_t target, base;
    LinearTerm index, value;
  };

  LinearTerm term(const IntTerm &t);
  LiaPtr formula(const BoolTerm &b);
  std::vector<LinearTerm> vec(const VectorTerm &v);
  void collect_folds(const BoolTerm &b, bool top);
  void collect_folds(const VectorTerm &v);
  const std::string &length_of_class(std::size_t cls) const
  {
    return length_[groups_.group_of_class[cls]];
  }
  LinearTerm substitute(const LinearTerm &t) const;

  void encode_fold_free(std::size_t g);
  void encode_lockstep(std::size_t g, std::vector<std::size_t> folds);

  const Formula &f_;
  ArrayGroups groups_;
  Encoding enc_;
  std::vector<std::string> length_;
  std::vector<Read> reads_;
  std::map<std::pair<std::size_t, LinearTerm>, std::size_t> read_id_;
  std::vector<LiaPtr> side_;
  std::vector<FoldInfo> folds_;
  std::map<const VectorTerm *, std::size_t> fold_id_;
  std::map<std::size_t, const VectorTerm::Tuple *> bound_;
  std::set<const BoolTerm *> bound_conjuncts_;
  std::vector<Link> links_;
  std::map<std::string, LinearTerm> params_;
};

LinearTerm Assembler::term(const IntTerm &t)
{
  return std::visit(
      [&](const auto &n) -> LinearTerm {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, IntTerm::Const>) {
          return LinearTerm(n.value);
        } else if constexpr (std::is_same_v<N, IntTerm::Var>) {
          enc_.psi.declare(n.name);
          return var(n.name);
        } else if constexpr (std::is_same_v<N, IntTerm::Add>) {
          return term(*n.lhs) + term(*n.rhs);
        } else if constexpr (std::is_same_v<N, IntTerm::Sub>) {
          return term(*n.lhs) - term(*n.rhs);
        } else if constexpr (std::is_same_v<N, IntTerm::Scale>) {
          return term(*n.term) * n.factor;
        } else if constexpr (std::is_same_v<N, IntTerm::Read>) {
          LinearTerm index = term(*n.index);
          const std::size_t cls = groups_.class_of.at(n.array);
          auto [it, fresh] = read_id_.try_emplace({cls, index}, reads_.size());
          if (fresh) {
            std::string name =
                enc_.psi.declare("#rd" + std::to_string(reads_.size()));
            reads_.push_back({cls, index, name});
            side_.push_back(lia::land(lia::le(0, index),
                                      lia::lt(index, var(length_of_class(cls)))));
          }
          return var(reads_[it->second].var);
        } else if constexpr (std::is_same_v<N, IntTerm::Len>) {
          return var(length_of_class(groups_.class_of.at(n.array)));
        } else {
          throw EncodeError("wildcard in a normalized formula");
        }
      },
      t.node);
}

std::vector<LinearTerm> Assembler::vec(const VectorTerm &v)
{
  if (const auto *t = std::get_if<VectorTerm::Tuple>(&v.node)) {
    std::vector<LinearTerm> out;
    for (const auto &item : t->items) {
      out.push_back(term(*item));
    }
    return out;
  }
  return folds_.at(fold_id_.at(&v)).outputs;
}

LiaPtr Assembler::formula(const BoolTerm &b)
{
  return std::visit(
      [&](const auto &n) -> LiaPtr {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, BoolTerm::Const>) {
          return lia::boolean(n.value);
        } else if constexpr (std::is_same_v<N, BoolTerm::ArrayEq>) {
          throw EncodeError(
              "array equality is only supported as a top-level conjunct");
        } else if constexpr (std::is_same_v<N, BoolTerm::IntCmp>) {
          return compare_terms(n.cmp, term(*n.lhs), term(*n.rhs));
        } else if constexpr (std::is_same_v<N, BoolTerm::Not>) {
          return lia::lnot(formula(*n.arg));
        } else if constexpr (std::is_same_v<N, BoolTerm::And>) {
          return lia::land(formula(*n.lhs), formula(*n.rhs));
        } else if constexpr (std::is_same_v<N, BoolTerm::Or>) {
          return lia::lor(formula(*n.lhs), formula(*n.rhs));
        } else if constexpr (std::is_same_v<N, BoolTerm::Implies>) {
          return lia::implies(formula(*n.lhs), formula(*n.rhs));
        } else {
          auto l = vec(*n.lhs);
          auto r = vec(*n.rhs);
          if (l.size() != r.size()) {
            throw EncodeError("vector equality between different arities");
          }
          std::vector<LiaPtr> parts;
          for (std::size_t k = 0; k < l.size(); ++k) {
            parts.push_back(lia::eq(l[k], r[k]));
          }
          return lia::land(parts);
        }
      },
      b.node);
}

void Assembler::collect_folds(const VectorTerm &v)
{
  if (const auto *fold = std::get_if<VectorTerm::Fold>(&v.node)) {
    collect_folds(*fold->init);
    if (!fold_id_.count(&v)) {
      fold_id_[&v] = folds_.size();
      folds_.push_back({fold, groups_.class_of.at(fold->array), {}, {}, {}});
    }
  }
}

void Assembler::collect_folds(const BoolTerm &b, bool top)
{
  std::visit(
      [&](const auto &n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, BoolTerm::Not>) {
          collect_folds(*n.arg, false);
        } else if constexpr (std::is_same_v<N, BoolTerm::And>
                             || std::is_same_v<N, BoolTerm::Or>
                             || std::is_same_v<N, BoolTerm::Implies>) {
          collect_folds(*n.lhs, false);
          collect_folds(*n.rhs, false);
        } else if constexpr (std::is_same_v<N, BoolTerm::VecEq>) {
          collect_folds(*n.lhs);
          collect_folds(*n.rhs);
          if (top) {
            const auto *lt = std::get_if<VectorTerm::Tuple>(&n.lhs->node);
            const auto *rt = std::get_if<VectorTerm::Tuple>(&n.rhs->node);
            const VectorTerm *fold = lt ? n.rhs.get() : n.lhs.get();
            const auto *tuple = lt ? lt : rt;
            if (tuple && (lt == nullptr) != (rt == nullptr)) {
              std::size_t id = fold_id_.at(fold);
              if (!bound_.count(id)) {
                bound_[id] = tuple;
                bound_conjuncts_.insert(&b);
              }
            }
          }
        }
      },
      b.node);
}

LinearTerm Assembler::substitute(const LinearTerm &t) const
{
  LinearTerm out(t.constant());
  for (const auto &[name, c] : t.coeffs()) {
    auto it = params_.find(name);
    out += it == params_.end() ? LinearTerm::var(name, c) : it->second * c;
  }
  return out;
}

Encoding Assembler::run()
{
  groups_ = preprocess_arrays(f_);
  for (const auto &[name, sort] : f_.decls) {
    if (sort == Sort::Int) {
      enc_.psi.declare(name);
    }
  }
  for (std::size_t g = 0; g < groups_.groups.size(); ++g) {
    length_.push_back(enc_.psi.declare("#len" + std::to_string(g)));
    enc_.psi.add(lia::ge(var(length_.back()), 0));
  }

  std::vector<BoolTermPtr> &rest = groups_.rest;
  for (const auto &c : rest) {
    collect_folds(*c, true);
  }

  std::set<std::string> reserved;
  for (const auto &[name, sort] : f_.decls) {
    reserved.insert(name);
  }
  HoistSink sink(reserved);
  for (std::size_t id = 0; id < folds_.size(); ++id) {
    FoldInfo &fi = folds_[id];
    fi.init = vec(*fi.fold->init);
    if (auto it = bound_.find(id); it != bound_.end()) {
      for (const auto &item : it->second->items) {
        fi.outputs.push_back(term(*item));
      }
    } else {
      for (std::size_t k = 0; k < fi.init.size(); ++k) {
        fi.outputs.push_back(var(enc_.psi.declare(
            "#o" + std::to_string(id) + "." + std::to_string(k))));
      }
    }
    if (fi.init.size() != static_cast<std::size_t>(fi.fold->fn.arity)
        || fi.outputs.size() != fi.init.size()) {
      throw EncodeError("fold arity mismatch");
    }
    fi.machine = translate_fold(fi.fold->fn, sink);
  }
  for (const auto &a : sink.assertions()) {
    const auto &cmp = std::get<BoolTerm::IntCmp>(a->node);
    params_[std::get<IntTerm::Var>(cmp.lhs->node).name] = term(*cmp.rhs);
  }
  for (const auto &l : groups_.links) {
    LinearTerm index = term(*l.index);
    side_.push_back(lia::land(lia::le(0, index),
                              lia::lt(index, var(length_of_class(l.target)))));
    links_.push_back({l.target, l.base, index, term(*l.value)});
  }

  for (const auto &c : rest) {
    if (!bound_conjuncts_.count(c.get())) {
      enc_.psi.add(formula(*c));
    }
  }

  std::vector<std::vector<std::size_t>> folds_of_group(groups_.groups.size());
  std::map<std::size_t, std::size_t> per_class;
  for (std::size_t id = 0; id < folds_.size(); ++id) {
    folds_of_group[groups_.group_of_class[folds_[id].cls]].push_back(id);
    ++per_class[folds_[id].cls];
  }
  enc_.stats.folds = folds_.size();
  for (const auto &[cls, n] : per_class) {
    enc_.stats.max_folds_per_array = std::max(enc_.stats.max_folds_per_array, n);
  }
  enc_.stats.groups = groups_.groups.size();

  enc_.map.groups.resize(groups_.groups.size());
  for (std::size_t g = 0; g < groups_.groups.size(); ++g) {
    GroupEncoding &ge = enc_.map.groups[g];
    ge.length_var = length_[g];
    for (std::size_t cls : groups_.groups[g]) {
      ge.tracks.push_back(groups_.classes[cls]);
      for (const auto &name : groups_.classes[cls]) {
        enc_.map.group_of_array[name] = g;
      }
    }
    // Folds starting at a constant negative index never read the array.
    std::vector<std::size_t> live;
    for (std::size_t id : folds_of_group[g]) {
      const FoldInfo &fi = folds_[id];
      if (fi.init[0].is_constant() && fi.init[0].constant() < 0) {
        for (std::size_t k = 0; k < fi.init.size(); ++k) {
          enc_.psi.add(lia::eq(fi.outputs[k], fi.init[k]));
        }
      } else {
        live.push_back(id);
      }
    }
    if (live.empty()) {
      encode_fold_free(g);
    } else {
      encode_lockstep(g, live);
    }
  }
  for (auto &s : side_) {
    enc_.psi.add(s);
  }
  enc_.stats.lia_size = enc_.psi.size();
  return std::move(enc_);
}

void Assembler::encode_fold_free(std::size_t g)
{
  GroupEncoding &ge = enc_.map.groups[g];
  const auto &classes = groups_.groups[g];
  auto track_of = [&](std::size_t cls) {
    return static_cast<std::size_t>(
        std::find(classes.begin(), classes.end(), cls) - classes.begin());
  };
  std::vector<LinearTerm> indices;
  for (const auto &r : reads_) {
    if (groups_.group_of_class[r.cls] == g) {
      index_of(indices, r.index);
    }
  }
  for (const auto &l : links_) {
    if (groups_.group_of_class[l.target] == g) {
      index_of(indices, l.index);
    }
  }
  const std::string prefix = "#g" + std::to_string(g) + ".";
  ge.cells.resize(classes.size());
  for (std::size_t t = 0; t < classes.size(); ++t) {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      std::string name = enc_.psi.declare(prefix + "cell" + std::to_string(t)
                                          + "." + std::to_string(k));
      ge.cells[t].push_back({indices[k], name});
    }
    for (std::size_t a = 0; a < indices.size(); ++a) {
      for (std::size_t b = a + 1; b < indices.size(); ++b) {
        enc_.psi.add(lia::implies(lia::eq(indices[a], indices[b]),
                                  lia::eq(var(ge.cells[t][a].second),
                                          var(ge.cells[t][b].second))));
      }
    }
  }
  auto cell = [&](std::size_t cls, const LinearTerm &index) {
    const auto &row = ge.cells[track_of(cls)];
    for (const auto &[i, name] : row) {
      if (i == index) {
        return var(name);
      }
    }
    throw EncodeError("missing cell");
  };
  for (const auto &r : reads_) {
    if (groups_.group_of_class[r.cls] == g) {
      enc_.psi.add(lia::eq(var(r.var), cell(r.cls, r.index)));
    }
  }
  for (const auto &l : links_) {
    if (groups_.group_of_class[l.target] != g) {
      continue;
    }
    enc_.psi.add(lia::eq(cell(l.target, l.index), l.value));
    for (const auto &i : indices) {
      enc_.psi.add(lia::implies(lia::ne(i, l.index),
                                lia::eq(cell(l.target, i), cell(l.base, i))));
    }
  }
}

void Assembler::encode_lockstep(std::size_t g, std::vector<std::size_t> ids)
{
  GroupEncoding &ge = enc_.map.groups[g];
  ge.lockstep = true;
  const auto &classes = groups_.groups[g];
  auto track_of = [&](std::size_t cls) {
    return static_cast<std::size_t>(
        std::find(classes.begin(), classes.end(), cls) - classes.begin());
  };
  const LinearTerm L = var(length_[g]);
  const std::string prefix = "#g" + std::to_string(g) + ".";
  LiaFormula &psi = enc_.psi;

  std::vector<LockstepFold> lf;
  for (std::size_t id : ids) {
    const FoldInfo &fi = folds_[id];
    LockstepFold f;
    f.id = id;
    f.track = track_of(fi.cls);
    f.machine = fi.machine;
    for (auto &t : f.machine.transitions) {
      for (auto &a : t.guard) {
        a.rhs = substitute(a.rhs);
      }
    }
    f.start = fi.init[0];
    f.init = fi.init;
    f.outputs = fi.outputs;
    lf.push_back(std::move(f));
  }
  std::vector<std::vector<int>> reversals;
  for (const auto &f : lf) {
    reversals.push_back(reversal_bound(f.machine));
  }
  LockstepMachine lm = build_lockstep(std::move(lf), classes.size());
  const std::size_t nfold = lm.folds.size();
  const std::size_t ncounters = lm.counter_owner.size();

  std::vector<const Read *> reads;
  for (const auto &r : reads_) {
    if (groups_.group_of_class[r.cls] == g) {
      reads.push_back(&r);
    }
  }
  std::vector<const Link *> links;
  for (const auto &l : links_) {
    if (groups_.group_of_class[l.target] == g) {
      links.push_back(&l);
    }
  }

  // Boundaries: subject 0 is the position, subject c >= 1 is counter c.
  std::vector<std::vector<LinearTerm>> bounds(ncounters);
  std::vector<bool> start_trivial(nfold), stop_trivial(nfold);
  for (std::size_t m = 0; m < nfold; ++m) {
    const auto &f = lm.folds[m];
    start_trivial[m] = f.start.is_constant() && f.start.constant() <= 0;
    stop_trivial[m] = f.outputs[0] == L;
    if (!start_trivial[m]) {
      index_of(bounds[0], f.start);
    }
    if (!stop_trivial[m]) {
      index_of(bounds[0], f.outputs[0]);
    }
  }
  for (const auto &t : lm.transitions) {
    for (const auto &cube : t.guard) {
      for (const auto &a : cube) {
        if (a.kind == ScmAtom::Kind::Counter) {
          index_of(bounds[static_cast<std::size_t>(a.index)], a.rhs);
        }
      }
    }
  }
  for (const Read *r : reads) {
    index_of(bounds[0], r->index);
  }
  for (const Link *l : links) {
    index_of(bounds[0], l->index);
  }
  std::vector<std::pair<int, std::size_t>> counter_load;
  for (std::size_t c = 1; c < ncounters; ++c) {
    if (!bounds[c].empty()) {
      auto [m, k] = lm.counter_owner[c];
      counter_load.push_back({reversals[m][k], bounds[c].size()});
    }
  }
  const std::size_t copies = layer_bound(bounds[0].size(), counter_load);
  ge.graph = build_mode_graph(lm, copies);
  ge.lockstep_transitions = lm.transitions.size();
  enc_.stats.layers += copies;
  enc_.stats.product_transitions += lm.transitions.size();
  enc_.stats.nfa_edges += ge.graph.nfa.edges.size();
  ge.parikh = encode_parikh(ge.graph.nfa, prefix, psi);
  const ModeGraph &mg = ge.graph;
  const auto &n = ge.parikh.counts;

  // Values at the entry and exit of every layer, and the sign of each
  // subject against each of its boundaries.
  auto name = [&](const std::string &what, std::size_t j, std::size_t s) {
    return psi.declare(prefix + what + std::to_string(j) + "." + std::to_string(s));
  };
  std::vector<std::vector<LinearTerm>> entry(copies), exit(copies);
  std::vector<std::vector<std::vector<LinearTerm>>> sgn(copies);
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t s = 0; s < ncounters; ++s) {
      if (s == 0 || !bounds[s].empty()) {
        entry[j].push_back(var(name("in", j, s)));
        exit[j].push_back(var(name("out", j, s)));
      } else {
        entry[j].push_back(LinearTerm());
        exit[j].push_back(LinearTerm());
      }
      sgn[j].emplace_back();
      for (std::size_t b = 0; b < bounds[s].size(); ++b) {
        LinearTerm v = var(psi.declare(prefix + "sg" + std::to_string(j) + "."
                                       + std::to_string(s) + "."
                                       + std::to_string(b)));
        sgn[j][s].push_back(v);
        psi.add(lia::between(-1, v, 1));
        const LinearTerm &bd = bounds[s][b];
        for (const LinearTerm &x : {entry[j][s], exit[j][s]}) {
          psi.add(lia::implies(lia::eq(v, -1), lia::lt(x, bd)));
          psi.add(lia::implies(lia::eq(v, 0), lia::eq(x, bd)));
          psi.add(lia::implies(lia::eq(v, 1), lia::gt(x, bd)));
        }
      }
    }
  }
  auto bound_index = [&](std::size_t s, const LinearTerm &b) {
    auto &bs = bounds[s];
    return static_cast<std::size_t>(std::find(bs.begin(), bs.end(), b) - bs.begin());
  };
  auto sign_is = [&](std::size_t j, std::size_t s, const LinearTerm &b, Cmp cmp) {
    const LinearTerm &v = sgn[j][s][bound_index(s, b)];
    return compare_terms(cmp, v, 0);
  };

  // Phases of every fold in every layer.
  std::vector<LiaPtr> in_range(nfold);
  std::vector<std::vector<LiaPtr>> active(nfold), stopping(nfold);
  for (std::size_t m = 0; m < nfold; ++m) {
    const auto &f = lm.folds[m];
    const LinearTerm &stop = f.outputs[0];
    in_range[m] = lia::land(lia::le(0, f.start), lia::lt(f.start, L));
    psi.add(lia::implies(in_range[m],
                         lia::land(lia::le(f.start, stop), lia::le(stop, L))));
    psi.add(lia::implies(lia::lnot(in_range[m]), lia::eq(stop, f.start)));
    for (std::size_t j = 0; j < copies; ++j) {
      std::vector<LiaPtr> a{in_range[m]};
      if (!start_trivial[m]) {
        a.push_back(sign_is(j, 0, f.start, Cmp::Ge));
      }
      if (!stop_trivial[m]) {
        a.push_back(sign_is(j, 0, stop, Cmp::Lt));
      }
      active[m].push_back(lia::land(a));
      stopping[m].push_back(stop_trivial[m]
                                ? lia::falsity()
                                : lia::land(in_range[m], sign_is(j, 0, stop, Cmp::Eq)));
    }
  }

  // Direction of each constrained counter in each layer.
  std::vector<std::vector<LinearTerm>> up(copies);
  for (std::size_t j = 0; j < copies; ++j) {
    for (std::size_t c = 0; c < ncounters; ++c) {
      if (c > 0 && !bounds[c].empty()) {
        up[j].push_back(var(name("up", j, c)));
        psi.add(lia::between(0, up[j].back(), 1));
      } else {
        up[j].push_back(LinearTerm());
      }
    }
  }

  // Edges.
  ge.witnesses.resize(mg.nfa.edges.size());
  for (std::size_t e = 0; e < mg.nfa.edges.size(); ++e) {
    if (!mg.consumes(e)) {
      continue;
    }
    const std::size_t j = mg.layer[e];
    const LockstepTransition &tr = lm.transitions[mg.transition[e]];
    std::vector<LinearTerm> w;
    for (std::size_t t = 0; t < classes.size(); ++t) {
      ge.witnesses[e].push_back(psi.declare(prefix + "w" + std::to_string(e)
                                            + "." + std::to_string(t)));
      w.push_back(var(ge.witnesses[e].back()));
    }
    std::vector<LiaPtr> body;
    std::vector<LiaPtr> cubes;
    for (const auto &cube : tr.guard) {
      std::vector<LiaPtr> atoms;
      for (const auto &a : cube) {
        if (a.kind == ScmAtom::Kind::Counter) {
          atoms.push_back(sign_is(j, static_cast<std::size_t>(a.index), a.rhs, a.cmp));
        } else {
          atoms.push_back(compare_terms(a.cmp, w[static_cast<std::size_t>(a.index)], a.rhs));
        }
      }
      cubes.push_back(lia::land(atoms));
    }
    body.push_back(lia::lor(cubes));
    for (std::size_t m = 0; m < nfold; ++m) {
      const auto &mv = tr.moves[m];
      body.push_back(lia::lnot(mv.stops ? active[m][j] : stopping[m][j]));
      if (several_states(lm.folds[m].machine)) {
        body.push_back(mv.assumed_active ? active[m][j] : lia::lnot(active[m][j]));
      }
      if (mg.kind[e] == ModeGraph::EdgeKind::Stay) {
        for (std::size_t k = 0; k < mv.delta.size(); ++k) {
          std::size_t c = 0;
          for (std::size_t cc = 1; cc < ncounters; ++cc) {
            if (lm.counter_owner[cc] == std::pair<std::size_t, std::size_t>{m, k + 1}) {
              c = cc;
            }
          }
          if (mv.delta[k] != 0 && !bounds[c].empty()) {
            body.push_back(lia::implies(active[m][j],
                                        lia::eq(up[j][c], mv.delta[k] > 0 ? 1 : 0)));
          }
        }
      }
    }
    for (const Read *r : reads) {
      body.push_back(lia::implies(sign_is(j, 0, r->index, Cmp::Eq),
                                  lia::eq(w[track_of(r->cls)], var(r->var))));
    }
    for (const Link *l : links) {
      const LinearTerm &wx = w[track_of(l->target)];
      body.push_back(lia::implies(sign_is(j, 0, l->index, Cmp::Eq),
                                  lia::eq(wx, l->value)));
      body.push_back(lia::implies(sign_is(j, 0, l->index, Cmp::Ne),
                                  lia::eq(wx, w[track_of(l->base)])));
    }
    psi.add(lia::implies(lia::gt(var(n[e]), 0), lia::land(body)));
  }

  // Counter chains.
  std::vector<LinearTerm> stay_pos(copies), adv_pos(copies);
  std::vector<std::vector<LinearTerm>> stay_sum(copies, std::vector<LinearTerm>(ncounters)),
      adv_sum(copies, std::vector<LinearTerm>(ncounters));
  for (std::size_t e = 0; e < mg.nfa.edges.size(); ++e) {
    if (!mg.consumes(e)) {
      continue;
    }
    const std::size_t j = mg.layer[e];
    const bool stay = mg.kind[e] == ModeGraph::EdgeKind::Stay;
    (stay ? stay_pos : adv_pos)[j] += var(n[e]);
    const auto &tr = lm.transitions[mg.transition[e]];
    for (std::size_t c = 1; c < ncounters; ++c) {
      auto [m, k] = lm.counter_owner[c];
      Integer d = tr.moves[m].delta[k - 1];
      if (d != 0) {
        (stay ? stay_sum : adv_sum)[j][c] += LinearTerm::var(n[e], d);
      }
    }
  }
  psi.add(lia::eq(entry[0][0], 0));
  for (std::size_t j = 0; j < copies; ++j) {
    psi.add(lia::eq(exit[j][0], entry[j][0] + stay_pos[j]));
    if (j + 1 < copies) {
      psi.add(lia::eq(entry[j + 1][0], exit[j][0] + adv_pos[j]));
    }
  }
  psi.add(lia::eq(exit[copies - 1][0], L));

  auto gated = [&](std::size_t m, std::size_t j, const LinearTerm &sum,
                   const std::string &what, std::size_t c) -> LinearTerm {
    if (sum.is_constant()) {
      return LinearTerm();
    }
    LinearTerm d = var(name(what, j, c));
    psi.add(lia::implies(active[m][j], lia::eq(d, sum)));
    psi.add(lia::implies(lia::lnot(active[m][j]), lia::eq(d, 0)));
    return d;
  };
  for (std::size_t c = 1; c < ncounters; ++c) {
    auto [m, k] = lm.counter_owner[c];
    const auto &f = lm.folds[m];
    LinearTerm total = f.init[k];
    const bool constrained = !bounds[c].empty();
    if (constrained) {
      psi.add(lia::eq(entry[0][c], f.init[k]));
    }
    for (std::size_t j = 0; j < copies; ++j) {
      LinearTerm ds = gated(m, j, stay_sum[j][c], "ds", c);
      LinearTerm da = gated(m, j, adv_sum[j][c], "da", c);
      if (constrained) {
        psi.add(lia::eq(exit[j][c], entry[j][c] + ds));
        if (j + 1 < copies) {
          psi.add(lia::eq(entry[j + 1][c], exit[j][c] + da));
        }
      }
      total += ds + da;
    }
    psi.add(lia::eq(f.outputs[k], constrained ? exit[copies - 1][c] : total));
  }
}

}  // namespace

Encoding assemble(const Formula &normalized)
{
  return Assembler(normalized).run();
}

}  // namespace afl
