#include "afl/modelgen.h"

#include <algorithm>
#include <sstream>

#include "afl/normalize.h"
#include "afl/parser.h"

namespace afl {

namespace {

Integer value_of(const LiaModel &m, const std::string &name)
{
  auto it = m.find(name);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

std::vector<std::size_t> eulerian_path(const Nfa &nfa,
                                       const std::vector<Integer> &counts,
                                       std::size_t sink)
{
  if (counts.size() != nfa.edges.size()) {
    throw NoEulerianPath("edge count vector has the wrong size");
  }
  std::vector<std::vector<std::size_t>> out(nfa.states);
  std::vector<Integer> left(counts);
  Integer total = 0;
  for (std::size_t e = 0; e < nfa.edges.size(); ++e) {
    if (left[e] < 0) {
      throw NoEulerianPath("negative edge count");
    }
    if (left[e] > 0) {
      out[nfa.edges[e].from].push_back(e);
      total += left[e];
    }
  }

  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> next(nfa.states, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{nfa.init, none}};
  std::vector<std::size_t> path;
  while (!stack.empty()) {
    const std::size_t v = stack.back().first;
    auto &k = next[v];
    while (k < out[v].size() && left[out[v][k]] == 0) {
      ++k;
    }
    if (k < out[v].size()) {
      const std::size_t e = out[v][k];
      --left[e];
      stack.push_back({nfa.edges[e].to, e});
    } else {
      if (stack.back().second != none) {
        path.push_back(stack.back().second);
      }
      stack.pop_back();
    }
  }
  std::reverse(path.begin(), path.end());

  if (static_cast<Integer>(path.size()) != total) {
    throw NoEulerianPath("used edges are not connected to the initial state");
  }
  std::size_t at = nfa.init;
  for (std::size_t e : path) {
    if (nfa.edges[e].from != at) {
      throw NoEulerianPath("edge counts are not balanced");
    }
    at = nfa.edges[e].to;
  }
  if (at != sink) {
    throw NoEulerianPath("path does not end in the chosen accepting state");
  }
  return path;
}

std::vector<std::size_t> extract_run(const GroupEncoding &group,
                                     const LiaModel &m)
{
  const Nfa &nfa = group.graph.nfa;
  std::vector<Integer> counts;
  for (const auto &n : group.parikh.counts) {
    counts.push_back(value_of(m, n));
  }
  std::size_t sink = nfa.states;
  for (std::size_t k = 0; k < group.parikh.sinks.size(); ++k) {
    if (value_of(m, group.parikh.sinks[k]) == 1) {
      sink = nfa.accepting[k];
      break;
    }
  }
  if (sink == nfa.states) {
    throw NoEulerianPath("no accepting state selected");
  }
  return eulerian_path(nfa, counts, sink);
}

Interpretation synthesize_arrays(const Formula &normalized,
                                 const Encoding &enc,
                                 const LiaModel &m,
                                 const ModelGenLimits &limits)
{
  Interpretation sigma;
  for (const auto &[name, sort] : normalized.decls) {
    if (sort == Sort::Int) {
      sigma.ints[name] = value_of(m, name);
    }
  }
  for (const auto &group : enc.map.groups) {
    const Integer length = value_of(m, group.length_var);
    if (length < 0 || length > limits.max_length) {
      throw ModelGenError("array length " + std::to_string(length)
                          + " is outside the supported range");
    }
    const auto len = static_cast<std::size_t>(length);
    std::vector<std::vector<Integer>> tracks(group.tracks.size(),
                                             std::vector<Integer>(len, 0));
    if (group.lockstep) {
      std::size_t pos = 0;
      for (std::size_t e : extract_run(group, m)) {
        if (!group.graph.consumes(e)) {
          continue;
        }
        if (pos == len) {
          throw ModelGenError("run is longer than the array");
        }
        for (std::size_t t = 0; t < tracks.size(); ++t) {
          tracks[t][pos] = value_of(m, group.witnesses[e][t]);
        }
        ++pos;
      }
      if (pos != len) {
        throw ModelGenError("run is shorter than the array");
      }
    } else {
      for (std::size_t t = 0; t < tracks.size(); ++t) {
        for (const auto &[index, cell] : group.cells[t]) {
          const Integer i = eval_lia(index, m);
          if (i >= 0 && i < length) {
            tracks[t][static_cast<std::size_t>(i)] = value_of(m, cell);
          }
        }
      }
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      for (const auto &name : group.tracks[t]) {
        sigma.arrays[name] = tracks[t];
      }
    }
  }
  return sigma;
}

Interpretation restrict_to(const Formula &f, const Interpretation &sigma)
{
  Interpretation out;
  for (const auto &[name, sort] : f.decls) {
    if (sort == Sort::Int) {
      auto it = sigma.ints.find(name);
      out.ints[name] = it == sigma.ints.end() ? 0 : it->second;
    } else {
      auto it = sigma.arrays.find(name);
      out.arrays[name] =
          it == sigma.arrays.end() ? std::vector<Integer>{} : it->second;
    }
  }
  return out;
}

bool has_wildcards(const Formula &f)
{
  for (const auto &[name, sort] : normalize(f).decls) {
    if (name.rfind(kWildcardPrefix, 0) == 0) {
      return true;
    }
  }
  return false;
}

bool validate_model(const Formula &f,
                    const Interpretation &sigma,
                    std::string *diagnostic)
{
  try {
    if (has_wildcards(f) ? eval_formula(normalize(f), sigma)
                         : eval_formula(f, sigma)) {
      return true;
    }
    if (diagnostic) {
      *diagnostic = "formula evaluates to false";
    }
  } catch (const AflException &e) {
    if (diagnostic) {
      *diagnostic = e.what();
    }
  }
  return false;
}

std::string print_model(const Interpretation &sigma)
{
  std::ostringstream os;
  os << "(model";
  for (const auto &[name, cells] : sigma.arrays) {
    os << "\n  (" << name << " (seq";
    for (Integer v : cells) {
      os << ' ' << v;
    }
    os << "))";
  }
  for (const auto &[name, v] : sigma.ints) {
    os << "\n  (" << name << ' ' << v << ')';
  }
  os << ")\n";
  return os.str();
}

Interpretation parse_model_text(std::string_view text)
{
  std::vector<Sexp> doc;
  try {
    doc = read_sexps(text);
  } catch (const AflException &e) {
    throw ModelParseError(e.what());
  }
  if (doc.size() == 2 && doc[0].is("sat")) {
    doc.erase(doc.begin());
  }
  if (doc.size() != 1 || doc[0].is_atom || doc[0].items.empty()
      || !doc[0].items[0].is("model")) {
    throw ModelParseError("expected a single (model ...) form");
  }
  Interpretation sigma;
  auto number = [](const Sexp &s) {
    std::optional<Integer> v;
    if (s.is_atom) {
      v = parse_integer(s.atom);
    }
    if (!v) {
      throw ModelParseError("expected an integer, got " + s.atom);
    }
    return *v;
  };
  for (std::size_t k = 1; k < doc[0].items.size(); ++k) {
    const Sexp &entry = doc[0].items[k];
    if (entry.is_atom || entry.items.size() != 2 || !entry.items[0].is_atom) {
      throw ModelParseError("expected (name value)");
    }
    const std::string &name = entry.items[0].atom;
    if (sigma.ints.count(name) || sigma.arrays.count(name)) {
      throw ModelParseError("duplicate entry for " + name);
    }
    const Sexp &value = entry.items[1];
    if (value.is_atom) {
      sigma.ints[name] = number(value);
      continue;
    }
    if (value.items.empty() || !value.items[0].is("seq")) {
      throw ModelParseError("expected (seq ...) for array " + name);
    }
    auto &cells = sigma.arrays[name];
    for (std::size_t c = 1; c < value.items.size(); ++c) {
      cells.push_back(number(value.items[c]));
    }
  }
  return sigma;
}

}  // namespace afl
