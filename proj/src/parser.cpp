#include "afl/parser.h"

#include <cctype>
#include <charconv>
#include <sstream>

namespace afl {

ParseError::ParseError(Kind kind, std::string message, SourceSpan span)
    : AflException(span.to_string() + ": " + message),
      kind_(kind),
      span_(span),
      detail_(std::move(message))
{
}

std::string to_string(ParseError::Kind kind)
{
  switch (kind) {
    case ParseError::Kind::Lexical: return "LexicalError";
    case ParseError::Kind::Syntax: return "SyntaxError";
    case ParseError::Kind::UndeclaredIdentifier: return "UndeclaredIdentifier";
    case ParseError::Kind::SortMismatch: return "SortMismatch";
    case ParseError::Kind::ForbiddenConstruct: return "ForbiddenConstruct";
    case ParseError::Kind::IllFormed: return "IllFormed";
  }
  return "?";
}

std::string Sexp::to_string() const
{
  if (is_atom) {
    return atom;
  }
  std::string out = "(";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) {
      out += ' ';
    }
    out += items[i].to_string();
  }
  return out + ")";
}

std::optional<Integer> parse_integer(std::string_view atom)
{
  if (atom.empty()) {
    return std::nullopt;
  }
  std::size_t digits = atom[0] == '-' ? 1 : 0;
  if (digits == atom.size()) {
    return std::nullopt;
  }
  for (std::size_t i = digits; i < atom.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(atom[i]))) {
      return std::nullopt;
    }
  }
  Integer value = 0;
  auto [ptr, ec] = std::from_chars(atom.data(), atom.data() + atom.size(),
                                   value);
  if (ec != std::errc() || ptr != atom.data() + atom.size()) {
    throw OverflowError("integer literal out of range: " + std::string(atom));
  }
  return value;
}

// ---------------------------------------------------------------------------
// Reader

namespace {

class Reader
{
public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Sexp> read_all()
  {
    std::vector<Sexp> out;
    skip_ws();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

private:
  SourceSpan here() const { return {pos_, pos_, line_, col_}; }

  void advance()
  {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws()
  {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') {
          advance();
        }
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  static bool symbol_char(char c)
  {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      return true;
    }
    static const std::string_view extra = "~!@$%^&*_-+=<>.?/:";
    return extra.find(c) != std::string_view::npos;
  }

  Sexp read()
  {
    SourceSpan start = here();
    char c = text_[pos_];
    if (c == ')') {
      throw ParseError(ParseError::Kind::Syntax, "unexpected ')'", start);
    }
    if (c == '(') {
      advance();
      Sexp list;
      list.is_atom = false;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != ')') {
        list.items.push_back(read());
        skip_ws();
      }
      if (pos_ >= text_.size()) {
        throw ParseError(ParseError::Kind::Syntax,
                         "unbalanced '(': expected ')'", start);
      }
      advance();
      list.span = start;
      list.span.end = pos_;
      return list;
    }
    if (!symbol_char(c)) {
      SourceSpan s = start;
      s.end = pos_ + 1;
      throw ParseError(ParseError::Kind::Lexical,
                       std::string("unexpected character '") + c + "'", s);
    }
    Sexp atom;
    while (pos_ < text_.size() && symbol_char(text_[pos_])) {
      atom.atom += text_[pos_];
      advance();
    }
    atom.span = start;
    atom.span.end = pos_;
    return atom;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

std::vector<Sexp> read_sexps(std::string_view text)
{
  return Reader(text).read_all();
}

// ---------------------------------------------------------------------------
// Formula construction

namespace {

using K = ParseError::Kind;

[[noreturn]] void fail(K kind, const std::string &msg, const Sexp &at)
{
  throw ParseError(kind, msg, at.span);
}

bool is_forbidden(const std::string &head)
{
  return head == "forall" || head == "exists" || head == "concat"
         || head == "++";
}

class Builder
{
public:
  Formula run(const std::vector<Sexp> &doc)
  {
    for (const auto &cmd : doc) {
      command(cmd);
    }
    return std::move(f_);
  }

private:
  void check_forbidden(const Sexp &s)
  {
    if (s.is_atom) {
      if (is_forbidden(s.atom)) {
        fail(K::ForbiddenConstruct,
             "'" + s.atom + "' is not part of the decidable fragment", s);
      }
      return;
    }
    for (const auto &item : s.items) {
      check_forbidden(item);
    }
  }

  std::string name(const Sexp &s, const char *what)
  {
    if (!s.is_atom || parse_integer(s.atom) || s.atom == "_") {
      fail(K::Syntax, std::string("expected ") + what, s);
    }
    return s.atom;
  }

  Integer literal(const Sexp &s)
  {
    if (s.is_atom) {
      try {
        if (auto v = parse_integer(s.atom)) {
          return *v;
        }
      } catch (const OverflowError &) {
        fail(K::Lexical, "integer literal out of range", s);
      }
    }
    fail(K::Syntax, "expected an integer literal", s);
  }

  void arity(const Sexp &s, std::size_t n)
  {
    if (s.items.size() != n) {
      fail(K::Syntax,
           "'" + s.items.front().atom + "' expects "
               + std::to_string(n - 1) + " argument(s)",
           s);
    }
  }

  void command(const Sexp &cmd)
  {
    if (cmd.is_atom || cmd.items.empty() || !cmd.items.front().is_atom) {
      fail(K::Syntax, "expected a command", cmd);
    }
    check_forbidden(cmd);
    const std::string &head = cmd.items.front().atom;
    if (head == "declare-int" || head == "declare-array") {
      arity(cmd, 2);
      std::string n = name(cmd.items[1], "a variable name");
      if (f_.decls.count(n)) {
        fail(K::IllFormed, "variable '" + n + "' declared twice", cmd.items[1]);
      }
      f_.decls.emplace(n, head == "declare-int" ? Sort::Int : Sort::Array);
    } else if (head == "assert") {
      arity(cmd, 2);
      f_.assertions.push_back(boolean(cmd.items[1]));
    } else if (head == "check-sat" || head == "get-model" || head == "exit") {
      // Accepted for SMT-LIB familiarity; they carry no meaning here.
    } else {
      fail(K::Syntax, "unknown command '" + head + "'", cmd);
    }
  }

  Sort sort_of(const std::string &n, const Sexp &at)
  {
    auto s = f_.sort_of(n);
    if (!s) {
      fail(K::UndeclaredIdentifier, "undeclared identifier '" + n + "'", at);
    }
    return *s;
  }

  std::string array_name(const Sexp &s)
  {
    std::string n = name(s, "an array name");
    if (sort_of(n, s) != Sort::Array) {
      fail(K::SortMismatch, "'" + n + "' is not an array", s);
    }
    return n;
  }

  // ---- integer terms

  IntTermPtr integer(const Sexp &s)
  {
    if (s.is_atom) {
      if (s.atom == "_") {
        return mk::wildcard(s.span);
      }
      bool numeric = s.atom[0] == '-' ? s.atom.size() > 1
                                            && std::isdigit(static_cast<
                                                unsigned char>(s.atom[1]))
                                      : std::isdigit(static_cast<
                                            unsigned char>(s.atom[0]));
      if (numeric) {
        return mk::num(literal(s), s.span);
      }
      if (sort_of(s.atom, s) != Sort::Int) {
        fail(K::SortMismatch,
             "'" + s.atom + "' is an array, expected an integer term", s);
      }
      return mk::var(s.atom, s.span);
    }
    if (s.items.empty() || !s.items.front().is_atom) {
      fail(K::Syntax, "expected an integer term", s);
    }
    const std::string &head = s.items.front().atom;
    if (head == "+") {
      if (s.items.size() < 3) {
        fail(K::Syntax, "'+' expects at least two arguments", s);
      }
      IntTermPtr acc = integer(s.items[1]);
      for (std::size_t i = 2; i < s.items.size(); ++i) {
        acc = mk::add(acc, integer(s.items[i]), s.span);
      }
      return acc;
    }
    if (head == "-") {
      if (s.items.size() == 2) {
        return mk::scale(-1, integer(s.items[1]), s.span);
      }
      if (s.items.size() < 3) {
        fail(K::Syntax, "'-' expects one or more arguments", s);
      }
      IntTermPtr acc = integer(s.items[1]);
      for (std::size_t i = 2; i < s.items.size(); ++i) {
        acc = mk::sub(acc, integer(s.items[i]), s.span);
      }
      return acc;
    }
    if (head == "*") {
      arity(s, 3);
      const Sexp &a = s.items[1];
      const Sexp &b = s.items[2];
      if (a.is_atom && parse_integer_safe(a)) {
        return mk::scale(literal(a), integer(b), s.span);
      }
      if (b.is_atom && parse_integer_safe(b)) {
        return mk::scale(literal(b), integer(a), s.span);
      }
      fail(K::IllFormed, "multiplication requires a literal factor", s);
    }
    if (head == "select") {
      arity(s, 3);
      return mk::read(array_name(s.items[1]), integer(s.items[2]), s.span);
    }
    if (head == "len") {
      arity(s, 2);
      return mk::len(array_name(s.items[1]), s.span);
    }
    fail(K::Syntax, "unknown integer operator '" + head + "'", s);
  }

  bool parse_integer_safe(const Sexp &s)
  {
    try {
      return parse_integer(s.atom).has_value();
    } catch (const OverflowError &) {
      fail(K::Lexical, "integer literal out of range", s);
    }
  }

  // ---- array terms

  bool looks_like_array(const Sexp &s)
  {
    if (s.is_atom) {
      if (s.atom == "_" || parse_integer_safe(s)) {
        return false;
      }
      return f_.sort_of(s.atom) == Sort::Array;
    }
    return s.is_call("store");
  }

  ArrayTermPtr array(const Sexp &s)
  {
    if (s.is_atom) {
      return mk::avar(array_name(s), s.span);
    }
    if (!s.is_call("store")) {
      fail(K::Syntax, "expected an array term", s);
    }
    arity(s, 4);
    return mk::write(array_name(s.items[1]), integer(s.items[2]),
                     integer(s.items[3]), s.span);
  }

  // ---- vectors and folds

  static bool looks_like_vector(const Sexp &s)
  {
    return s.is_call("vec") || s.is_call("fold");
  }

  VectorTermPtr vector(const Sexp &s)
  {
    if (s.is_call("vec")) {
      if (s.items.size() < 2) {
        fail(K::IllFormed, "a vector needs at least one component", s);
      }
      std::vector<IntTermPtr> items;
      for (std::size_t i = 1; i < s.items.size(); ++i) {
        items.push_back(integer(s.items[i]));
      }
      return mk::tuple(std::move(items), s.span);
    }
    if (s.is_call("fold")) {
      arity(s, 4);
      std::string a = array_name(s.items[1]);
      VectorTermPtr init = vector(s.items[2]);
      FoldFunction fn = function(s.items[3], init->arity());
      return mk::fold(a, init, std::move(fn), s.span);
    }
    // A bare integer term stands for a vector of arity one.
    return mk::tuple({integer(s)}, s.span);
  }

  FoldFunction function(const Sexp &s, int arity)
  {
    if (!s.is_call("branches")) {
      fail(K::Syntax, "expected (branches ...)", s);
    }
    FoldFunction fn;
    fn.arity = arity;
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      fn.branches.push_back(branch(s.items[i]));
    }
    return fn;
  }

  Branch branch(const Sexp &s)
  {
    if (!s.is_call("branch")) {
      fail(K::Syntax, "expected (branch GUARD UPDATE)", s);
    }
    arity(s, 3);
    Branch br;
    br.span = s.span;
    guard(s.items[1], br.guard);
    update(s.items[2], br.updates);
    return br;
  }

  std::optional<ImplicitVar> implicit(const Sexp &s)
  {
    if (s.is("e")) {
      return ImplicitVar::elem();
    }
    if (s.is("i")) {
      return ImplicitVar::index();
    }
    if (s.is("s")) {
      return ImplicitVar::state();
    }
    if (s.is_call("c")) {
      arity(s, 2);
      return ImplicitVar::ctr(static_cast<int>(literal(s.items[1])));
    }
    return std::nullopt;
  }

  static std::optional<Cmp> comparison(const std::string &op)
  {
    if (op == "=") return Cmp::Eq;
    if (op == "distinct") return Cmp::Ne;
    if (op == "<") return Cmp::Lt;
    if (op == ">") return Cmp::Gt;
    if (op == "<=") return Cmp::Le;
    if (op == ">=") return Cmp::Ge;
    return std::nullopt;
  }

  void guard(const Sexp &s, std::vector<GuardAtom> &out)
  {
    if (s.is("true")) {
      return;
    }
    if (s.is_call("and")) {
      for (std::size_t i = 1; i < s.items.size(); ++i) {
        guard(s.items[i], out);
      }
      return;
    }
    if (s.is_atom || s.items.empty() || !s.items.front().is_atom) {
      fail(K::Syntax, "expected a guard atom", s);
    }
    auto cmp = comparison(s.items.front().atom);
    if (!cmp) {
      fail(K::Syntax, "expected a guard comparison", s);
    }
    arity(s, 3);
    GuardAtom atom;
    atom.span = s.span;
    atom.cmp = *cmp;
    const Sexp *rhs = &s.items[2];
    if (auto lhs = implicit(s.items[1])) {
      atom.lhs = *lhs;
    } else if (auto flipped = implicit(s.items[2])) {
      atom.lhs = *flipped;
      atom.cmp = flip(*cmp);
      rhs = &s.items[1];
    } else {
      fail(K::IllFormed,
           "a guard atom must compare e, i, s or (c k) with a term", s);
    }
    if (atom.lhs.kind == ImplicitVar::Kind::State) {
      atom.rhs = mk::num(literal(*rhs), rhs->span);
    } else {
      atom.rhs = integer(*rhs);
    }
    out.push_back(std::move(atom));
  }

  int counter_ref(const Sexp &s)
  {
    auto v = implicit(s);
    if (!v || v->kind != ImplicitVar::Kind::Counter) {
      fail(K::Syntax, "expected a counter (c k)", s);
    }
    return v->counter;
  }

  void update(const Sexp &s, std::vector<UpdateAtom> &out)
  {
    if (s.is("skip")) {
      out.push_back({UpdateAtom::Skip{}, s.span});
      return;
    }
    if (s.is("break")) {
      out.push_back({UpdateAtom::Break{}, s.span});
      return;
    }
    if (s.is_call("seq")) {
      for (std::size_t i = 1; i < s.items.size(); ++i) {
        update(s.items[i], out);
      }
      return;
    }
    if (s.is_call("inc") || s.is_call("dec")) {
      if (s.items.size() != 2 && s.items.size() != 3) {
        fail(K::Syntax, "expected (inc (c k) [n])", s);
      }
      int k = counter_ref(s.items[1]);
      Integer n = s.items.size() == 3 ? literal(s.items[2]) : 1;
      if (s.is_call("dec")) {
        n = checked_neg(n);
      }
      out.push_back({UpdateAtom::CtrAdd{k, n}, s.span});
      return;
    }
    if (s.is_call("set-s")) {
      arity(s, 2);
      out.push_back({UpdateAtom::SetState{literal(s.items[1])}, s.span});
      return;
    }
    fail(K::Syntax, "expected an update", s);
  }

  // ---- Boolean terms

  BoolTermPtr boolean(const Sexp &s)
  {
    if (s.is("true") || s.is("false")) {
      return mk::boolean(s.is("true"), s.span);
    }
    if (s.is_atom || s.items.empty() || !s.items.front().is_atom) {
      fail(K::Syntax, "expected a Boolean term", s);
    }
    const std::string &head = s.items.front().atom;
    if (head == "not") {
      arity(s, 2);
      return mk::lnot(boolean(s.items[1]), s.span);
    }
    if (head == "and" || head == "or") {
      if (s.items.size() == 1) {
        return mk::boolean(head == "and", s.span);
      }
      BoolTermPtr acc = boolean(s.items[1]);
      for (std::size_t i = 2; i < s.items.size(); ++i) {
        acc = head == "and" ? mk::land(acc, boolean(s.items[i]), s.span)
                            : mk::lor(acc, boolean(s.items[i]), s.span);
      }
      return acc;
    }
    if (head == "=>") {
      arity(s, 3);
      return mk::implies(boolean(s.items[1]), boolean(s.items[2]), s.span);
    }
    if (head == "=") {
      arity(s, 3);
      const Sexp &a = s.items[1];
      const Sexp &b = s.items[2];
      if (looks_like_vector(a) || looks_like_vector(b)) {
        return mk::vec_eq(vector(a), vector(b), s.span);
      }
      if (looks_like_array(a) || looks_like_array(b)) {
        return mk::array_eq(array(a), array(b), s.span);
      }
      return mk::eq(integer(a), integer(b), s.span);
    }
    if (auto cmp = comparison(head)) {
      arity(s, 3);
      return mk::cmp(*cmp, integer(s.items[1]), integer(s.items[2]), s.span);
    }
    fail(K::Syntax, "unknown Boolean operator '" + head + "'", s);
  }

  Formula f_;
};

}  // namespace

Formula parse(std::string_view text)
{
  Formula f = Builder().run(read_sexps(text));
  auto errors = validate(f);
  if (!errors.empty()) {
    const auto &e = errors.front();
    K kind = K::IllFormed;
    if (e.kind == WellFormednessError::Kind::UndeclaredVariable) {
      kind = K::UndeclaredIdentifier;
    } else if (e.kind == WellFormednessError::Kind::SortMismatch) {
      kind = K::SortMismatch;
    }
    throw ParseError(kind, to_string(e.kind) + ": " + e.message, e.span);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

void put(std::ostream &os, const IntTerm &t);

void put(std::ostream &os, const IntTerm &t)
{
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntTerm::Const>) {
          os << x.value;
        } else if constexpr (std::is_same_v<T, IntTerm::Var>) {
          os << x.name;
        } else if constexpr (std::is_same_v<T, IntTerm::Add>) {
          os << "(+ ";
          put(os, *x.lhs);
          os << ' ';
          put(os, *x.rhs);
          os << ')';
        } else if constexpr (std::is_same_v<T, IntTerm::Sub>) {
          os << "(- ";
          put(os, *x.lhs);
          os << ' ';
          put(os, *x.rhs);
          os << ')';
        } else if constexpr (std::is_same_v<T, IntTerm::Scale>) {
          os << "(* " << x.factor << ' ';
          put(os, *x.term);
          os << ')';
        } else if constexpr (std::is_same_v<T, IntTerm::Read>) {
          os << "(select " << x.array << ' ';
          put(os, *x.index);
          os << ')';
        } else if constexpr (std::is_same_v<T, IntTerm::Len>) {
          os << "(len " << x.array << ')';
        } else {
          os << '_';
        }
      },
      t.node);
}

void put(std::ostream &os, const ArrayTerm &t)
{
  if (auto v = std::get_if<ArrayTerm::Var>(&t.node)) {
    os << v->name;
    return;
  }
  const auto &w = std::get<ArrayTerm::Write>(t.node);
  os << "(store " << w.base << ' ';
  put(os, *w.index);
  os << ' ';
  put(os, *w.value);
  os << ')';
}

void put(std::ostream &os, const GuardAtom &g)
{
  os << '(' << to_string(g.cmp) << ' ';
  switch (g.lhs.kind) {
    case ImplicitVar::Kind::Elem: os << 'e'; break;
    case ImplicitVar::Kind::Index: os << 'i'; break;
    case ImplicitVar::Kind::State: os << 's'; break;
    case ImplicitVar::Kind::Counter: os << "(c " << g.lhs.counter << ')'; break;
  }
  os << ' ';
  put(os, *g.rhs);
  os << ')';
}

void put(std::ostream &os, const UpdateAtom &u)
{
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, UpdateAtom::CtrAdd>) {
          os << "(inc (c " << x.counter << ") " << x.delta << ')';
        } else if constexpr (std::is_same_v<T, UpdateAtom::SetState>) {
          os << "(set-s " << x.state << ')';
        } else if constexpr (std::is_same_v<T, UpdateAtom::Skip>) {
          os << "skip";
        } else {
          os << "break";
        }
      },
      u.node);
}

void put(std::ostream &os, const VectorTerm &v)
{
  if (auto t = std::get_if<VectorTerm::Tuple>(&v.node)) {
    os << "(vec";
    for (const auto &item : t->items) {
      os << ' ';
      put(os, *item);
    }
    os << ')';
    return;
  }
  const auto &f = std::get<VectorTerm::Fold>(v.node);
  os << "(fold " << f.array << ' ';
  put(os, *f.init);
  os << " (branches";
  for (const auto &br : f.fn.branches) {
    os << " (branch ";
    if (br.guard.empty()) {
      os << "true";
    } else if (br.guard.size() == 1) {
      put(os, br.guard.front());
    } else {
      os << "(and";
      for (const auto &g : br.guard) {
        os << ' ';
        put(os, g);
      }
      os << ')';
    }
    os << ' ';
    if (br.updates.size() == 1) {
      put(os, br.updates.front());
    } else {
      os << "(seq";
      for (const auto &u : br.updates) {
        os << ' ';
        put(os, u);
      }
      os << ')';
    }
    os << ')';
  }
  os << "))";
}

void put(std::ostream &os, const BoolTerm &b)
{
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BoolTerm::Const>) {
          os << (x.value ? "true" : "false");
        } else if constexpr (std::is_same_v<T, BoolTerm::ArrayEq>) {
          os << "(= ";
          put(os, *x.lhs);
          os << ' ';
          put(os, *x.rhs);
          os << ')';
        } else if constexpr (std::is_same_v<T, BoolTerm::IntCmp>) {
          os << '(' << to_string(x.cmp) << ' ';
          put(os, *x.lhs);
          os << ' ';
          put(os, *x.rhs);
          os << ')';
        } else if constexpr (std::is_same_v<T, BoolTerm::Not>) {
          os << "(not ";
          put(os, *x.arg);
          os << ')';
        } else if constexpr (std::is_same_v<T, BoolTerm::VecEq>) {
          os << "(= ";
          put(os, *x.lhs);
          os << ' ';
          put(os, *x.rhs);
          os << ')';
        } else {
          const char *op = std::is_same_v<T, BoolTerm::And>  ? "and"
                           : std::is_same_v<T, BoolTerm::Or> ? "or"
                                                              : "=>";
          os << '(' << op << ' ';
          put(os, *x.lhs);
          os << ' ';
          put(os, *x.rhs);
          os << ')';
        }
      },
      b.node);
}

template <typename T>
std::string render(const T &t)
{
  std::ostringstream os;
  put(os, t);
  return os.str();
}

}  // namespace

std::string print(const IntTerm &t) { return render(t); }
std::string print(const BoolTerm &t) { return render(t); }
std::string print(const VectorTerm &t) { return render(t); }
std::string print(const ArrayTerm &t) { return render(t); }

std::string print(const Formula &f)
{
  std::ostringstream os;
  for (const auto &[name, sort] : f.decls) {
    os << (sort == Sort::Int ? "(declare-int " : "(declare-array ") << name
       << ")\n";
  }
  for (const auto &a : f.assertions) {
    os << "(assert ";
    put(os, *a);
    os << ")\n";
  }
  os << "(check-sat)\n";
  return os.str();
}

}  // namespace afl
