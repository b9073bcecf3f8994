#include "afl/scm.h"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <sstream>
#include <tuple>

#include "afl/cfg.h"
#include "afl/parser.h"

namespace afl {

ScmAtom ScmAtom::negated() const
{
  ScmAtom a = *this;
  a.cmp = negate(cmp);
  return a;
}

std::string ScmAtom::to_string(const std::vector<std::string> &counters) const
{
  std::string subject;
  if (kind == Kind::Counter) {
    subject = index < static_cast<int>(counters.size())
                  ? counters[static_cast<std::size_t>(index)]
                  : "#" + std::to_string(index);
  } else {
    subject = index == 0 ? "e" : "e@" + std::to_string(index);
  }
  return subject + " " + afl::to_string(cmp) + " " + rhs.to_string();
}

bool cube_consistent(const Cube &cube)
{
  using Wide = __int128;
  struct Range
  {
    Wide lo = std::numeric_limits<Integer>::min();
    Wide hi = std::numeric_limits<Integer>::max();
    std::set<Integer> excluded;
  };
  std::map<std::tuple<int, int, LinearTerm>, Range> groups;
  for (const auto &a : cube) {
    auto &r = groups[{static_cast<int>(a.kind), a.index, a.rhs.variable_part()}];
    const Wide k = a.rhs.constant();
    switch (a.cmp) {
      case Cmp::Lt: r.hi = std::min(r.hi, k - 1); break;
      case Cmp::Le: r.hi = std::min(r.hi, k); break;
      case Cmp::Gt: r.lo = std::max(r.lo, k + 1); break;
      case Cmp::Ge: r.lo = std::max(r.lo, k); break;
      case Cmp::Eq:
        r.lo = std::max(r.lo, k);
        r.hi = std::min(r.hi, k);
        break;
      case Cmp::Ne: r.excluded.insert(a.rhs.constant()); break;
    }
  }
  for (const auto &[key, r] : groups) {
    if (r.lo > r.hi) {
      return false;
    }
    if (r.hi - r.lo < static_cast<Wide>(r.excluded.size())) {
      bool free_point = false;
      for (Wide v = r.lo; v <= r.hi && !free_point; ++v) {
        free_point = !r.excluded.count(static_cast<Integer>(v));
      }
      if (!free_point) {
        return false;
      }
    }
  }
  return true;
}

std::vector<std::size_t> Scm::outgoing(std::size_t state) const
{
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < transitions.size(); ++t) {
    if (transitions[t].from == state) {
      out.push_back(t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

HoistSink::HoistSink(std::set<std::string> reserved)
    : reserved_(std::move(reserved))
{
}

LinearTerm HoistSink::hoist(const IntTermPtr &t)
{
  if (const auto *c = std::get_if<IntTerm::Const>(&t->node)) {
    return LinearTerm(c->value);
  }
  std::string text = print(*t);
  auto it = by_text_.find(text);
  if (it != by_text_.end()) {
    return LinearTerm::var(it->second);
  }
  std::string name;
  do {
    name = kGuardHoistPrefix + std::to_string(next_++);
  } while (reserved_.count(name));
  reserved_.insert(name);
  by_text_[text] = name;
  params_.push_back(name);
  assertions_.push_back(mk::eq(mk::var(name), t));
  return LinearTerm::var(name);
}

// ---------------------------------------------------------------------------

namespace {

void push_unique(Cube &cube, const ScmAtom &a)
{
  if (std::find(cube.begin(), cube.end(), a) == cube.end()) {
    cube.push_back(a);
  }
}

Cube branch_cube(const Branch &br, HoistSink &sink)
{
  Cube cube;
  for (const auto &g : br.guard) {
    ScmAtom a;
    switch (g.lhs.kind) {
      case ImplicitVar::Kind::State: continue;
      case ImplicitVar::Kind::Elem:
        a.kind = ScmAtom::Kind::Input;
        a.index = 0;
        break;
      case ImplicitVar::Kind::Index:
        a.kind = ScmAtom::Kind::Counter;
        a.index = 0;
        break;
      case ImplicitVar::Kind::Counter:
        a.kind = ScmAtom::Kind::Counter;
        a.index = g.lhs.counter;
        break;
    }
    a.cmp = g.cmp;
    a.rhs = sink.hoist(g.rhs);
    push_unique(cube, a);
  }
  return cube;
}

}  // namespace

Scm translate_fold(const FoldFunction &fn, HoistSink &sink)
{
  const ControlFlowGraph cfg = build_cfg(fn);
  if (auto v = find_scc_violation(cfg)) {
    throw NonMonotoneScc("counter c" + std::to_string(v->counter)
                         + " moves in both directions in the cycle through "
                           "state "
                         + std::to_string(v->state));
  }

  Scm m;
  m.counters.push_back("i");
  for (int k = 1; k < fn.arity; ++k) {
    m.counters.push_back("c" + std::to_string(k));
  }
  for (Integer s : cfg.states) {
    m.states.push_back("q" + std::to_string(s));
  }
  m.done = m.states.size();
  m.states.push_back("done");
  m.init = cfg.state_index(0);

  std::vector<Cube> cubes;
  cubes.reserve(fn.branches.size());
  for (const auto &br : fn.branches) {
    cubes.push_back(branch_cube(br, sink));
  }
  m.params = sink.params();

  const std::size_t k = m.counters.size();
  for (std::size_t q = 0; q < cfg.states.size(); ++q) {
    std::vector<const CfgEdge *> edges;
    for (const auto &e : cfg.edges) {
      if (cfg.state_index(e.from) == q) {
        edges.push_back(&e);
      }
    }
    for (const CfgEdge *e : edges) {
      const Cube &cube = cubes[e->branch];
      if (!cube_consistent(cube)) {
        continue;
      }
      ScmTransition t;
      t.from = q;
      t.guard = cube;
      t.branch = static_cast<int>(e->branch);
      t.delta.assign(k, 0);
      if (e->is_break) {
        t.to = m.done;
        t.stops = true;
      } else {
        t.to = cfg.state_index(e->to);
        t.delta[0] = 1;
        for (std::size_t c = 1; c < k; ++c) {
          t.delta[c] = e->delta[c - 1];
        }
      }
      m.transitions.push_back(std::move(t));
    }

    // Catch-all: no branch guard holds. Each negated guard g1 ∧ ... ∧ gn is
    // written as the disjoint union ¬g1, g1 ∧ ¬g2, ..., and the branches are
    // combined by a product of these case splits.
    std::vector<Cube> rest{{}};
    for (const CfgEdge *e : edges) {
      const Cube &g = cubes[e->branch];
      std::vector<Cube> next;
      for (const auto &c : rest) {
        for (std::size_t j = 0; j < g.size(); ++j) {
          Cube d = c;
          for (std::size_t l = 0; l < j; ++l) {
            push_unique(d, g[l]);
          }
          push_unique(d, g[j].negated());
          if (cube_consistent(d)) {
            next.push_back(std::move(d));
          }
        }
      }
      rest = std::move(next);
      if (rest.empty()) {
        break;
      }
    }
    for (auto &c : rest) {
      ScmTransition t;
      t.from = q;
      t.to = m.done;
      t.guard = std::move(c);
      t.delta.assign(k, 0);
      t.stops = true;
      m.transitions.push_back(std::move(t));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

Cube shift_counters(const Cube &cube, int by)
{
  Cube out = cube;
  for (auto &a : out) {
    if (a.kind == ScmAtom::Kind::Counter) {
      a.index += by;
    }
  }
  return out;
}

}  // namespace

Scm product(const Scm &m1, const Scm &m2)
{
  Scm m;
  m.counters = m1.counters;
  std::set<std::string> used(m1.counters.begin(), m1.counters.end());
  for (std::string c : m2.counters) {
    while (used.count(c)) {
      c += "'";
    }
    used.insert(c);
    m.counters.push_back(c);
  }
  m.params = m1.params;
  for (const auto &p : m2.params) {
    if (std::find(m.params.begin(), m.params.end(), p) == m.params.end()) {
      m.params.push_back(p);
    }
  }
  const std::size_t n2 = m2.states.size();
  for (const auto &s1 : m1.states) {
    for (const auto &s2 : m2.states) {
      m.states.push_back("(" + s1 + "," + s2 + ")");
    }
  }
  m.init = m1.init * n2 + m2.init;
  m.done = m1.done * n2 + m2.done;
  m.tracks = std::max(m1.tracks, m2.tracks);

  const int k1 = static_cast<int>(m1.counters.size());
  for (std::size_t i1 = 0; i1 < m1.transitions.size(); ++i1) {
    const auto &t1 = m1.transitions[i1];
    for (std::size_t i2 = 0; i2 < m2.transitions.size(); ++i2) {
      const auto &t2 = m2.transitions[i2];
      ScmTransition t;
      t.from = t1.from * n2 + t2.from;
      t.to = t1.to * n2 + t2.to;
      t.guard = t1.guard;
      for (const auto &a : shift_counters(t2.guard, k1)) {
        t.guard.push_back(a);
      }
      t.delta = t1.delta;
      t.delta.insert(t.delta.end(), t2.delta.begin(), t2.delta.end());
      t.stops = t.to == m.done && t.from != m.done;
      if (t1.parts.empty()) {
        t.parts.push_back(i1);
      } else {
        t.parts = t1.parts;
      }
      if (t2.parts.empty()) {
        t.parts.push_back(i2);
      } else {
        t.parts.insert(t.parts.end(), t2.parts.begin(), t2.parts.end());
      }
      m.transitions.push_back(std::move(t));
    }
  }
  return m;
}

Scm align(const Scm &scm, const std::string &start_param)
{
  Scm m;
  m.counters.push_back("p");
  m.counters.insert(m.counters.end(), scm.counters.begin(), scm.counters.end());
  m.params = scm.params;
  if (std::find(m.params.begin(), m.params.end(), start_param)
      == m.params.end()) {
    m.params.push_back(start_param);
  }
  m.states = scm.states;
  const std::size_t wait = m.states.size();
  m.states.push_back("wait");
  m.init = wait;
  m.done = scm.done;
  m.tracks = scm.tracks;

  const std::size_t k = m.counters.size();
  const LinearTerm start = LinearTerm::var(start_param);
  auto at_p = [&](Cmp cmp) {
    return ScmAtom{ScmAtom::Kind::Counter, 0, cmp, start};
  };
  auto shifted = [&](const ScmTransition &src) {
    ScmTransition t = src;
    t.guard = shift_counters(src.guard, 1);
    t.delta.insert(t.delta.begin(), 1);
    return t;
  };
  auto idle = [&](std::size_t from, std::size_t to, Cube guard) {
    ScmTransition t;
    t.from = from;
    t.to = to;
    t.guard = std::move(guard);
    t.delta.assign(k, 0);
    t.delta[0] = 1;
    t.stops = to == m.done && from != m.done;
    return t;
  };

  for (const auto &src : scm.transitions) {
    m.transitions.push_back(shifted(src));
  }
  m.transitions.push_back(idle(wait, wait, {at_p(Cmp::Lt)}));
  for (const auto &src : scm.transitions) {
    if (src.from != scm.init) {
      continue;
    }
    ScmTransition t = shifted(src);
    t.from = wait;
    t.guard.insert(t.guard.begin(), at_p(Cmp::Eq));
    m.transitions.push_back(std::move(t));
  }
  m.transitions.push_back(idle(wait, m.done, {at_p(Cmp::Gt)}));
  m.transitions.push_back(idle(m.done, m.done, {}));
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> machine_sccs(const Scm &scm, int &count)
{
  const std::size_t n = scm.states.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto &t : scm.transitions) {
    adj[t.from].push_back(t.to);
  }
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int counter = 0;
  count = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = count;
      } while (w != v);
      ++count;
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] < 0) {
      visit(v);
    }
  }
  return comp;
}

int sign(Integer v) { return (v > 0) - (v < 0); }

}  // namespace

std::vector<int> reversal_bound(const Scm &scm)
{
  int ncomp = 0;
  const std::vector<int> comp = machine_sccs(scm, ncomp);
  const std::size_t k = scm.counters.size();
  std::vector<int> result(k, 0);
  constexpr int kNone = std::numeric_limits<int>::min();

  for (std::size_t c = 0; c < k; ++c) {
    std::vector<int> inner(static_cast<std::size_t>(ncomp), 0);
    for (const auto &t : scm.transitions) {
      if (comp[t.from] != comp[t.to] || t.delta[c] == 0) {
        continue;
      }
      int &s = inner[static_cast<std::size_t>(comp[t.from])];
      int d = sign(t.delta[c]);
      if (s != 0 && s != d) {
        throw NonMonotoneScc("counter " + scm.counters[c]
                             + " moves in both directions inside a cycle");
      }
      s = d;
    }
    // best[C][last sign + 1]: most reversals on a path from the initial state
    // into component C whose last nonzero increment had the given sign.
    std::vector<std::array<int, 3>> best(static_cast<std::size_t>(ncomp),
                                         {kNone, kNone, kNone});
    best[static_cast<std::size_t>(comp[scm.init])][1] = 0;
    auto step = [](int reversals, int last, int d, int &out_last) {
      out_last = d == 0 ? last : d;
      return reversals + (d != 0 && last != 0 && last != d ? 1 : 0);
    };
    // Tarjan numbers components in reverse topological order.
    for (int C = ncomp - 1; C >= 0; --C) {
      auto &here = best[static_cast<std::size_t>(C)];
      std::array<int, 3> after = {kNone, kNone, kNone};
      for (int ls = -1; ls <= 1; ++ls) {
        if (here[static_cast<std::size_t>(ls + 1)] == kNone) {
          continue;
        }
        int nl;
        int r = step(here[static_cast<std::size_t>(ls + 1)], ls,
                     inner[static_cast<std::size_t>(C)], nl);
        after[static_cast<std::size_t>(nl + 1)] =
            std::max(after[static_cast<std::size_t>(nl + 1)], r);
      }
      for (int ls = -1; ls <= 1; ++ls) {
        if (after[static_cast<std::size_t>(ls + 1)] != kNone) {
          result[c] = std::max(result[c], after[static_cast<std::size_t>(ls + 1)]);
        }
      }
      for (const auto &t : scm.transitions) {
        if (comp[t.from] != C || comp[t.to] == C) {
          continue;
        }
        auto &there = best[static_cast<std::size_t>(comp[t.to])];
        for (int ls = -1; ls <= 1; ++ls) {
          if (after[static_cast<std::size_t>(ls + 1)] == kNone) {
            continue;
          }
          int nl;
          int r = step(after[static_cast<std::size_t>(ls + 1)], ls,
                       sign(t.delta[c]), nl);
          there[static_cast<std::size_t>(nl + 1)] =
              std::max(there[static_cast<std::size_t>(nl + 1)], r);
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

ReplayError::ReplayError(std::size_t step, std::string constraint)
    : AflException("replay fails at step " + std::to_string(step) + ": "
                   + constraint),
      step_(step),
      constraint_(std::move(constraint))
{
}

namespace {

bool atom_holds(const ScmAtom &a,
                const std::vector<Integer> &counters,
                const Cells &cells,
                std::size_t pos,
                const LiaModel &params)
{
  Integer lhs = a.kind == ScmAtom::Kind::Counter
                    ? counters.at(static_cast<std::size_t>(a.index))
                    : cells.at(static_cast<std::size_t>(a.index)).at(pos);
  return compare(lhs, a.cmp, eval_lia(a.rhs, params));
}

std::size_t positions(const Cells &cells)
{
  return cells.empty() ? 0 : cells.front().size();
}

void apply(std::vector<Integer> &counters, const std::vector<Integer> &delta)
{
  for (std::size_t c = 0; c < counters.size(); ++c) {
    counters[c] = checked_add(counters[c], delta[c]);
  }
}

}  // namespace

bool guard_holds(const Cube &guard,
                 const std::vector<Integer> &counters,
                 const Cells &cells,
                 std::size_t pos,
                 const LiaModel &params)
{
  for (const auto &a : guard) {
    if (!atom_holds(a, counters, cells, pos, params)) {
      return false;
    }
  }
  return true;
}

std::vector<Integer> replay(const Scm &scm,
                            const std::vector<std::size_t> &run,
                            const Cells &cells,
                            const LiaModel &params,
                            const std::vector<Integer> &init)
{
  std::vector<Integer> counters = init;
  std::size_t state = scm.init;
  for (std::size_t step = 0; step < run.size(); ++step) {
    if (run[step] >= scm.transitions.size()) {
      throw ReplayError(step, "no transition " + std::to_string(run[step]));
    }
    const auto &t = scm.transitions[run[step]];
    if (t.from != state) {
      throw ReplayError(step, "transition leaves " + scm.states[t.from]
                                  + " but the run is in " + scm.states[state]);
    }
    if (step >= positions(cells)) {
      throw ReplayError(step, "input exhausted");
    }
    for (const auto &a : t.guard) {
      if (!atom_holds(a, counters, cells, step, params)) {
        throw ReplayError(step, a.to_string(scm.counters));
      }
    }
    apply(counters, t.delta);
    state = t.to;
  }
  return counters;
}

SimulationResult simulate(const Scm &scm,
                          const Cells &cells,
                          const LiaModel &params,
                          const std::vector<Integer> &init)
{
  SimulationResult r;
  r.counters = init;
  r.state = scm.init;
  std::vector<std::vector<std::size_t>> out(scm.states.size());
  for (std::size_t t = 0; t < scm.transitions.size(); ++t) {
    out[scm.transitions[t].from].push_back(t);
  }
  const std::size_t n = positions(cells);
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (out[r.state].empty()) {
      break;
    }
    std::optional<std::size_t> chosen;
    for (std::size_t t : out[r.state]) {
      if (!guard_holds(scm.transitions[t].guard, r.counters, cells, pos,
                       params)) {
        continue;
      }
      if (!chosen) {
        chosen = t;
        continue;
      }
      const auto &a = scm.transitions[*chosen];
      const auto &b = scm.transitions[t];
      if (a.to != b.to || a.delta != b.delta) {
        throw SimulationError("transitions " + std::to_string(*chosen)
                              + " and " + std::to_string(t)
                              + " are both enabled at position "
                              + std::to_string(pos));
      }
    }
    if (!chosen) {
      throw SimulationError("no transition enabled in state "
                            + scm.states[r.state] + " at position "
                            + std::to_string(pos));
    }
    const auto &t = scm.transitions[*chosen];
    apply(r.counters, t.delta);
    r.state = t.to;
    r.run.push_back(*chosen);
  }
  return r;
}

std::string dump(const Scm &scm)
{
  std::ostringstream os;
  auto list = [&](const std::vector<std::string> &items) {
    std::string s = "(";
    for (std::size_t i = 0; i < items.size(); ++i) {
      s += (i ? " " : "") + items[i];
    }
    return s + ")";
  };
  os << "scm counters=" << list(scm.counters)
     << " params=" << list(scm.params) << " tracks=" << scm.tracks << "\n";
  for (std::size_t q = 0; q < scm.states.size(); ++q) {
    os << "state " << q << " " << scm.states[q];
    if (q == scm.init) {
      os << " init";
    }
    if (q == scm.done) {
      os << " done";
    }
    os << "\n";
  }
  for (std::size_t i = 0; i < scm.transitions.size(); ++i) {
    const auto &t = scm.transitions[i];
    os << "t" << i << " " << scm.states[t.from] << " -> " << scm.states[t.to]
       << " [";
    for (std::size_t a = 0; a < t.guard.size(); ++a) {
      os << (a ? ", " : "") << t.guard[a].to_string(scm.counters);
    }
    os << "] delta (";
    for (std::size_t c = 0; c < t.delta.size(); ++c) {
      os << (c ? " " : "") << t.delta[c];
    }
    os << ")";
    if (t.branch >= 0) {
      os << " branch " << t.branch;
    }
    if (t.stops) {
      os << " stop";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace afl
