#include "afl/backend.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <unordered_map>

#include "afl/parser.h"

#ifndef AFL_DEFAULT_SOLVER_CMD
#define AFL_DEFAULT_SOLVER_CMD "z3 -in -smt2"
#endif

namespace afl {

std::string to_string(LiaResult::Status s)
{
  switch (s) {
    case LiaResult::Status::Sat: return "sat";
    case LiaResult::Status::Unsat: return "unsat";
    case LiaResult::Status::Unknown: return "unknown";
  }
  return "?";
}

std::string resolve_solver_command(const SolverConfig &cfg)
{
  if (!cfg.command.empty()) {
    return cfg.command;
  }
  if (const char *env = std::getenv("AFL_SOLVER_CMD"); env && *env) {
    return env;
  }
  return AFL_DEFAULT_SOLVER_CMD;
}

// ---------------------------------------------------------------------------
// Child process

namespace {

std::vector<std::string> split_command(const std::string &cmd)
{
  std::istringstream is(cmd);
  std::vector<std::string> out;
  for (std::string w; is >> w;) {
    out.push_back(w);
  }
  return out;
}

void ignore_sigpipe()
{
  static const bool done = [] {
    struct sigaction sa{};
    sa.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &sa, nullptr);
    return true;
  }();
  (void)done;
}

struct Fd
{
  int fd = -1;
  ~Fd() { reset(); }
  void reset()
  {
    if (fd >= 0) {
      ::close(fd);
      fd = -1;
    }
  }
};

}  // namespace

std::string run_solver_process(const std::string &command,
                               const std::string &script,
                               double timeout_seconds,
                               std::size_t memory_mb)
{
  ignore_sigpipe();
  auto words = split_command(command);
  if (words.empty()) {
    throw SolverSpawnError("empty solver command");
  }
  std::vector<char *> argv;
  for (auto &w : words) {
    argv.push_back(w.data());
  }
  argv.push_back(nullptr);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw SolverSpawnError(std::string("pipe: ") + std::strerror(errno));
  }
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw SolverSpawnError(std::string("pipe: ") + std::strerror(errno));
  }
  // Reports a failed exec back to the parent.
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
      ::close(fd);
    }
    throw SolverSpawnError(std::string("pipe: ") + std::strerror(errno));
  }

  pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1],
                   err_pipe[0], err_pipe[1]}) {
      ::close(fd);
    }
    throw SolverSpawnError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    if (memory_mb > 0) {
      struct rlimit rl;
      rl.rlim_cur = rl.rlim_max = static_cast<rlim_t>(memory_mb) << 20;
      setrlimit(RLIMIT_AS, &rl);
    }
    execvp(argv[0], argv.data());
    int e = errno;
    ssize_t ignored = ::write(err_pipe[1], &e, sizeof e);
    (void)ignored;
    _exit(127);
  }

  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  Fd to_child{in_pipe[1]}, from_child{out_pipe[0]}, exec_status{err_pipe[0]};

  int exec_errno = 0;
  if (::read(exec_status.fd, &exec_errno, sizeof exec_errno)
      == static_cast<ssize_t>(sizeof exec_errno)) {
    waitpid(pid, nullptr, 0);
    throw SolverSpawnError("cannot execute '" + words.front()
                           + "': " + std::strerror(exec_errno));
  }

  fcntl(to_child.fd, F_SETFL, fcntl(to_child.fd, F_GETFL) | O_NONBLOCK);
  const auto deadline =
      std::chrono::steady_clock::now()
      + std::chrono::milliseconds(
          static_cast<long long>(std::max(0.001, timeout_seconds) * 1000));
  std::size_t written = 0;
  std::string output;
  char buf[65536];
  bool timed_out = false;
  while (from_child.fd >= 0) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
            .count()
        + 1);
    pollfd fds[2];
    int n = 0;
    fds[n++] = {from_child.fd, POLLIN, 0};
    if (to_child.fd >= 0) {
      fds[n++] = {to_child.fd, POLLOUT, 0};
    }
    int r = poll(fds, static_cast<nfds_t>(n), wait_ms);
    if (r < 0) {
      if (errno == EINTR) {
        continue;
      }
      break;
    }
    if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t w = ::write(to_child.fd, script.data() + written,
                          script.size() - written);
      if (w > 0) {
        written += static_cast<std::size_t>(w);
      }
      if (w < 0 && errno != EAGAIN && errno != EINTR) {
        to_child.reset();
      } else if (written == script.size()) {
        to_child.reset();
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      ssize_t got = ::read(from_child.fd, buf, sizeof buf);
      if (got > 0) {
        output.append(buf, static_cast<std::size_t>(got));
      } else if (got == 0 || (errno != EAGAIN && errno != EINTR)) {
        from_child.reset();
      }
    }
  }
  if (timed_out) {
    kill(pid, SIGKILL);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  if (timed_out) {
    throw SolverTimeout("solver exceeded " + std::to_string(timeout_seconds)
                        + " s");
  }
  return output;
}

// ---------------------------------------------------------------------------
// Responses

namespace {

struct Tok
{
  std::string text;
  bool open = false, close = false;
};

std::vector<Tok> tokenize(std::string_view s)
{
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({"(", true, false});
      ++i;
    } else if (c == ')') {
      out.push_back({")", false, true});
      ++i;
    } else if (c == '|' || c == '"') {
      auto close = s.find(c, i + 1);
      if (close == std::string_view::npos) {
        throw ProtocolError("unterminated token in solver output");
      }
      out.push_back({std::string(s.substr(c == '|' ? i + 1 : i,
                                          c == '|' ? close - i - 1
                                                   : close - i + 1))});
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))
             && s[j] != '(' && s[j] != ')') {
        ++j;
      }
      out.push_back({std::string(s.substr(i, j - i))});
      i = j;
    }
  }
  return out;
}

struct Node
{
  std::string atom;
  std::vector<Node> items;
  bool list = false;
};

Node tree(const std::vector<Tok> &toks, std::size_t &pos)
{
  if (pos >= toks.size()) {
    throw ProtocolError("truncated solver output");
  }
  const Tok &t = toks[pos++];
  if (t.close) {
    throw ProtocolError("unbalanced ')' in solver output");
  }
  Node n;
  if (!t.open) {
    n.atom = t.text;
    return n;
  }
  n.list = true;
  while (pos < toks.size() && !toks[pos].close) {
    n.items.push_back(tree(toks, pos));
  }
  if (pos >= toks.size()) {
    throw ProtocolError("truncated solver output");
  }
  ++pos;
  return n;
}

Integer value_of(const Node &n)
{
  if (!n.list) {
    if (auto v = parse_integer(n.atom)) {
      return *v;
    }
    throw ProtocolError("non-integer model value: " + n.atom);
  }
  if (n.items.size() == 2 && !n.items[0].list && n.items[0].atom == "-") {
    return checked_neg(value_of(n.items[1]));
  }
  throw ProtocolError("unsupported model value");
}

}  // namespace

LiaModel parse_model(std::string_view text)
{
  auto toks = tokenize(text);
  std::size_t pos = 0;
  Node root = tree(toks, pos);
  if (!root.list) {
    throw ProtocolError("model is not a list");
  }
  LiaModel m;
  for (const auto &entry : root.items) {
    if (!entry.list) {
      if (entry.atom == "model") {
        continue;
      }
      throw ProtocolError("unexpected model entry " + entry.atom);
    }
    if (entry.items.size() != 5 || entry.items[0].atom != "define-fun"
        || !entry.items[2].list || !entry.items[2].items.empty()) {
      throw ProtocolError("unsupported model entry");
    }
    if (entry.items[3].atom != "Int") {
      continue;
    }
    m[entry.items[1].atom] = value_of(entry.items[4]);
  }
  return m;
}

namespace {

class OutOfMemory : public ProtocolError
{
public:
  using ProtocolError::ProtocolError;
};

LiaResult read_response(const LiaFormula &f, const std::string &out)
{
  auto toks = tokenize(out);
  LiaResult r;
  r.engine = "external";
  if (toks.empty()) {
    throw ProtocolError("solver produced no output");
  }
  std::size_t pos = 0;
  Node first = tree(toks, pos);
  if (first.list) {
    std::string msg = first.items.size() >= 2 ? first.items[1].atom : "";
    if (msg.find("out of memory") != std::string::npos) {
      throw OutOfMemory("solver error: " + msg);
    }
    throw ProtocolError("solver error: " + msg);
  }
  if (first.atom == "unsat") {
    r.status = LiaResult::Status::Unsat;
    return r;
  }
  if (first.atom == "unknown") {
    r.status = LiaResult::Status::Unknown;
    r.reason = "solver answered unknown";
    return r;
  }
  if (first.atom != "sat") {
    throw ProtocolError("unexpected solver answer: " + first.atom);
  }
  if (pos >= toks.size()) {
    throw ProtocolError("missing model");
  }
  std::size_t start = pos;
  (void)tree(toks, pos);
  // Re-serialize the model list for parse_model.
  std::string text;
  for (std::size_t k = start; k < pos; ++k) {
    const auto &t = toks[k];
    text += t.open || t.close ? t.text : "|" + t.text + "|";
    text += ' ';
  }
  LiaModel raw = parse_model(text);
  r.status = LiaResult::Status::Sat;
  for (const auto &v : f.vars) {
    auto it = raw.find(v);
    r.model[v] = it == raw.end() ? 0 : it->second;
  }
  return r;
}

bool is_z3(const std::string &cmd)
{
  auto words = split_command(cmd);
  if (words.empty()) {
    return false;
  }
  const std::string &prog = words.front();
  const std::string base = prog.substr(prog.find_last_of('/') + 1);
  return base.rfind("z3", 0) == 0;
}

}  // namespace

LiaResult solve_external(const LiaFormula &f, const SolverConfig &cfg)
{
  std::string cmd = resolve_solver_command(cfg);
  const bool z3 = is_z3(cmd);
  if (z3 && cfg.z3_memory_mb > 0 && cmd.find("memory_max_size") == std::string::npos) {
    cmd += " memory_max_size=" + std::to_string(cfg.z3_memory_mb);
  }
  const std::string script = to_smtlib(f, true);
  try {
    return read_response(f, run_solver_process(cmd, script, cfg.timeout_seconds,
                                               cfg.memory_mb));
  } catch (const OutOfMemory &) {
    if (!z3 || cmd.find("default_tactic") != std::string::npos) {
      throw;
    }
  }
  return read_response(f, run_solver_process(cmd + " tactic.default_tactic=smt", script,
                                             cfg.timeout_seconds, cfg.memory_mb));
}

// ---------------------------------------------------------------------------
// Fallback: interval branch-and-prune

namespace {

using Wide = __int128;

struct Interval
{
  Wide lo, hi;
};

enum class Tri
{
  False,
  True,
  Unknown
};

class BranchAndPrune
{
public:
  BranchAndPrune(const LiaFormula &f, const FallbackLimits &limits)
      : f_(f), limits_(limits)
  {
    for (std::size_t k = 0; k < f.vars.size(); ++k) {
      index_[f.vars[k]] = k;
    }
    Integer box = limits.box;
    if (box <= 0) {
      Wide sum = 0;
      for (const auto &a : f.assertions) {
        sum += constant_mass(*a);
      }
      box = static_cast<Integer>(std::clamp<Wide>(2 * sum + 4, 4, 1 << 20));
    }
    box_ = box;
    for (const auto &a : f.assertions) {
      collect_atoms(a);
    }
  }

  LiaResult run()
  {
    LiaResult r;
    r.engine = "fallback";
    std::vector<Interval> dom(f_.vars.size(), Interval{-Wide(box_), Wide(box_)});
    auto outcome = search(dom);
    if (outcome == Outcome::Found) {
      r.status = LiaResult::Status::Sat;
      r.model = model_;
    } else if (outcome == Outcome::Exhausted) {
      r.status = LiaResult::Status::Unsat;
      r.bounded = true;
      r.reason = "no model with every variable in [-" + std::to_string(box_)
                 + ", " + std::to_string(box_) + "]";
    } else {
      r.status = LiaResult::Status::Unknown;
      r.reason = "fallback node budget exhausted";
    }
    return r;
  }

private:
  enum class Outcome
  {
    Found,
    Exhausted,
    Budget
  };

  static Wide constant_mass(const LiaNode &n)
  {
    Wide s = 0;
    if (n.kind == LiaNode::Kind::Atom) {
      s += n.lhs.constant() < 0 ? -Wide(n.lhs.constant()) : Wide(n.lhs.constant());
      s += n.rhs.constant() < 0 ? -Wide(n.rhs.constant()) : Wide(n.rhs.constant());
    }
    for (const auto &a : n.args) {
      s += constant_mass(*a);
    }
    return s;
  }

  // Atoms that must hold in every model: conjuncts at the top level.
  void collect_atoms(const LiaPtr &a)
  {
    if (a->kind == LiaNode::Kind::And) {
      for (const auto &c : a->args) {
        collect_atoms(c);
      }
    } else if (a->kind == LiaNode::Kind::Atom) {
      units_.push_back(a.get());
    }
  }

  Interval range(const LinearTerm &t, const std::vector<Interval> &dom) const
  {
    Interval r{t.constant(), t.constant()};
    for (const auto &[name, c] : t.coeffs()) {
      const Interval &d = dom[index_.at(name)];
      Wide a = Wide(c) * d.lo, b = Wide(c) * d.hi;
      r.lo += std::min(a, b);
      r.hi += std::max(a, b);
    }
    return r;
  }

  Tri eval(const LiaNode &n, const std::vector<Interval> &dom) const
  {
    switch (n.kind) {
      case LiaNode::Kind::True: return Tri::True;
      case LiaNode::Kind::False: return Tri::False;
      case LiaNode::Kind::Atom: {
        Interval l = range(n.lhs - n.rhs, dom);
        switch (n.rel) {
          case LiaRel::Eq:
            if (l.lo == 0 && l.hi == 0) return Tri::True;
            if (l.lo > 0 || l.hi < 0) return Tri::False;
            return Tri::Unknown;
          case LiaRel::Lt:
            if (l.hi < 0) return Tri::True;
            if (l.lo >= 0) return Tri::False;
            return Tri::Unknown;
          case LiaRel::Le:
            if (l.hi <= 0) return Tri::True;
            if (l.lo > 0) return Tri::False;
            return Tri::Unknown;
        }
        return Tri::Unknown;
      }
      case LiaNode::Kind::Not: {
        Tri t = eval(*n.args.front(), dom);
        return t == Tri::Unknown ? t : (t == Tri::True ? Tri::False : Tri::True);
      }
      case LiaNode::Kind::And: {
        Tri acc = Tri::True;
        for (const auto &a : n.args) {
          Tri t = eval(*a, dom);
          if (t == Tri::False) return Tri::False;
          if (t == Tri::Unknown) acc = Tri::Unknown;
        }
        return acc;
      }
      case LiaNode::Kind::Or: {
        Tri acc = Tri::False;
        for (const auto &a : n.args) {
          Tri t = eval(*a, dom);
          if (t == Tri::True) return Tri::True;
          if (t == Tri::Unknown) acc = Tri::Unknown;
        }
        return acc;
      }
    }
    return Tri::Unknown;
  }

  static Wide floor_div(Wide a, Wide b)
  {
    Wide q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
      --q;
    }
    return q;
  }

  static Wide ceil_div(Wide a, Wide b) { return -floor_div(-a, b); }

  // Bound tightening on unit atoms sum(c x) + k REL 0; false on conflict.
  bool propagate(std::vector<Interval> &dom) const
  {
    for (int round = 0; round < 8; ++round) {
      bool changed = false;
      for (const LiaNode *atom : units_) {
        LinearTerm t = atom->lhs - atom->rhs;
        Interval whole = range(t, dom);
        // t <= -strict is required: Lt means t <= -1, Le and Eq t <= 0;
        // Eq additionally means t >= 0.
        Wide upper = atom->rel == LiaRel::Lt ? -1 : 0;
        for (const auto &[name, c] : t.coeffs()) {
          Interval &d = dom[index_.at(name)];
          Wide a = Wide(c) * d.lo, b = Wide(c) * d.hi;
          Wide rest_lo = whole.lo - std::min(a, b);
          Wide rest_hi = whole.hi - std::max(a, b);
          // c*x <= upper - rest_lo
          Wide cap = upper - rest_lo;
          Wide nlo = d.lo, nhi = d.hi;
          if (c > 0) {
            nhi = std::min(nhi, floor_div(cap, c));
          } else {
            nlo = std::max(nlo, ceil_div(cap, c));
          }
          if (atom->rel == LiaRel::Eq) {
            // c*x >= -rest_hi
            Wide floor_v = -rest_hi;
            if (c > 0) {
              nlo = std::max(nlo, ceil_div(floor_v, c));
            } else {
              nhi = std::min(nhi, floor_div(floor_v, c));
            }
          }
          if (nlo > nhi) {
            return false;
          }
          if (nlo != d.lo || nhi != d.hi) {
            d.lo = nlo;
            d.hi = nhi;
            changed = true;
            whole = range(t, dom);
          }
        }
      }
      if (!changed) {
        break;
      }
    }
    return true;
  }

  bool point_model(const std::vector<Interval> &dom, LiaModel &m) const
  {
    for (std::size_t k = 0; k < dom.size(); ++k) {
      Wide v = std::clamp<Wide>(0, dom[k].lo, dom[k].hi);
      m[f_.vars[k]] = static_cast<Integer>(v);
    }
    try {
      return eval_lia(f_, m);
    } catch (const AflException &) {
      return false;
    }
  }

  Outcome search(std::vector<Interval> dom)
  {
    if (++nodes_ > limits_.node_budget) {
      return Outcome::Budget;
    }
    if (!propagate(dom)) {
      return Outcome::Exhausted;
    }
    Tri all = Tri::True;
    for (const auto &a : f_.assertions) {
      Tri t = eval(*a, dom);
      if (t == Tri::False) {
        return Outcome::Exhausted;
      }
      if (t == Tri::Unknown) {
        all = Tri::Unknown;
      }
    }
    LiaModel m;
    if (point_model(dom, m)) {
      model_ = std::move(m);
      return Outcome::Found;
    }
    if (all == Tri::True) {
      // Every point satisfies the formula, so the point above must have.
      return Outcome::Exhausted;
    }
    std::size_t pick = dom.size();
    Wide widest = 0;
    for (std::size_t k = 0; k < dom.size(); ++k) {
      Wide w = dom[k].hi - dom[k].lo;
      if (w > widest) {
        widest = w;
        pick = k;
      }
    }
    if (pick == dom.size()) {
      return Outcome::Exhausted;
    }
    Interval d = dom[pick];
    Wide mid = floor_div(d.lo + d.hi, 2);
    // Visit the half nearer to zero first; small models are more common.
    Interval left{d.lo, mid}, right{mid + 1, d.hi};
    bool left_first = right.lo > 0 || left.hi >= 0;
    Interval halves[2] = {left_first ? left : right, left_first ? right : left};
    bool budget = false;
    for (const auto &h : halves) {
      auto next = dom;
      next[pick] = h;
      auto o = search(std::move(next));
      if (o == Outcome::Found) {
        return o;
      }
      budget = budget || o == Outcome::Budget;
    }
    return budget ? Outcome::Budget : Outcome::Exhausted;
  }

  const LiaFormula &f_;
  FallbackLimits limits_;
  Integer box_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<const LiaNode *> units_;
  std::uint64_t nodes_ = 0;
  LiaModel model_;
};

}  // namespace

LiaResult solve_fallback(const LiaFormula &f, const FallbackLimits &limits)
{
  return BranchAndPrune(f, limits).run();
}

LiaResult solve_lia(const LiaFormula &f, const SolverConfig &cfg)
{
  LiaResult r;
  if (cfg.choice == SolverConfig::Choice::Fallback) {
    r = solve_fallback(f, cfg.fallback);
  } else {
    try {
      r = solve_external(f, cfg);
    } catch (const BackendError &e) {
      if (cfg.choice == SolverConfig::Choice::External) {
        r.status = LiaResult::Status::Unknown;
        r.reason = e.what();
        r.engine = "external";
        return r;
      }
      r = solve_fallback(f, cfg.fallback);
      r.reason = std::string(e.what()) + (r.reason.empty() ? "" : "; ")
                 + r.reason;
    }
    if (r.status == LiaResult::Status::Unknown
        && cfg.choice == SolverConfig::Choice::Auto && r.engine == "external") {
      std::string why = r.reason;
      r = solve_fallback(f, cfg.fallback);
      if (r.status == LiaResult::Status::Unknown) {
        r.reason = why + "; " + r.reason;
      }
    }
  }
  if (r.status == LiaResult::Status::Sat) {
    bool ok = false;
    try {
      ok = eval_lia(f, r.model);
    } catch (const AflException &) {
      ok = false;
    }
    if (!ok) {
      r.status = LiaResult::Status::Unknown;
      r.reason = r.engine + " model fails the re-check";
      r.model.clear();
    }
  }
  return r;
}

}  // namespace afl
