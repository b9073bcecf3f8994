#include "afl/lia.h"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "afl/parser.h"

namespace afl {

// ---------------------------------------------------------------------------
// LinearTerm

LinearTerm LinearTerm::var(const std::string &name, Integer coeff)
{
  LinearTerm t;
  t.add(name, coeff);
  return t;
}

const std::string *LinearTerm::as_var() const
{
  if (constant_ != 0 || coeffs_.size() != 1 || coeffs_.begin()->second != 1) {
    return nullptr;
  }
  return &coeffs_.begin()->first;
}

void LinearTerm::add(const std::string &name, Integer coeff)
{
  if (coeff == 0) {
    return;
  }
  auto [it, fresh] = coeffs_.emplace(name, coeff);
  if (!fresh) {
    it->second = checked_add(it->second, coeff);
    if (it->second == 0) {
      coeffs_.erase(it);
    }
  }
}

LinearTerm &LinearTerm::operator+=(const LinearTerm &o)
{
  for (const auto &[name, c] : o.coeffs_) {
    add(name, c);
  }
  constant_ = checked_add(constant_, o.constant_);
  return *this;
}

LinearTerm &LinearTerm::operator-=(const LinearTerm &o)
{
  for (const auto &[name, c] : o.coeffs_) {
    add(name, checked_neg(c));
  }
  constant_ = checked_sub(constant_, o.constant_);
  return *this;
}

LinearTerm &LinearTerm::operator*=(Integer k)
{
  if (k == 0) {
    coeffs_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto &[name, c] : coeffs_) {
    c = checked_mul(c, k);
  }
  constant_ = checked_mul(constant_, k);
  return *this;
}

LinearTerm LinearTerm::variable_part() const
{
  LinearTerm t = *this;
  t.constant_ = 0;
  return t;
}

std::string LinearTerm::to_string() const
{
  return to_smtlib(*this);
}

// ---------------------------------------------------------------------------
// Builders

namespace lia {

namespace {

LiaPtr make(LiaNode n)
{
  return std::make_shared<const LiaNode>(std::move(n));
}

const LiaPtr &true_node()
{
  static const LiaPtr t = make(LiaNode{LiaNode::Kind::True, {}, {}, {}, {}});
  return t;
}

const LiaPtr &false_node()
{
  static const LiaPtr f = make(LiaNode{LiaNode::Kind::False, {}, {}, {}, {}});
  return f;
}

bool holds(LiaRel rel, Integer a, Integer b)
{
  switch (rel) {
    case LiaRel::Eq: return a == b;
    case LiaRel::Lt: return a < b;
    case LiaRel::Le: return a <= b;
  }
  return false;
}

LiaPtr junction(LiaNode::Kind kind, std::vector<LiaPtr> args)
{
  const bool conj = kind == LiaNode::Kind::And;
  const auto absorbing = conj ? LiaNode::Kind::False : LiaNode::Kind::True;
  const auto neutral = conj ? LiaNode::Kind::True : LiaNode::Kind::False;
  std::vector<LiaPtr> flat;
  flat.reserve(args.size());
  for (auto &a : args) {
    if (a->kind == absorbing) {
      return conj ? false_node() : true_node();
    }
    if (a->kind == neutral) {
      continue;
    }
    if (a->kind == kind) {
      flat.insert(flat.end(), a->args.begin(), a->args.end());
    } else {
      flat.push_back(std::move(a));
    }
  }
  if (flat.empty()) {
    return conj ? true_node() : false_node();
  }
  if (flat.size() == 1) {
    return flat.front();
  }
  LiaNode n;
  n.kind = kind;
  n.args = std::move(flat);
  return make(std::move(n));
}

}  // namespace

LiaPtr truth() { return true_node(); }
LiaPtr falsity() { return false_node(); }
LiaPtr boolean(bool v) { return v ? true_node() : false_node(); }

LiaPtr atom(LiaRel rel, LinearTerm lhs, LinearTerm rhs)
{
  if (lhs.is_constant() && rhs.is_constant()) {
    return boolean(holds(rel, lhs.constant(), rhs.constant()));
  }
  if (lhs == rhs) {
    return boolean(rel != LiaRel::Lt);
  }
  LiaNode n;
  n.kind = LiaNode::Kind::Atom;
  n.rel = rel;
  n.lhs = std::move(lhs);
  n.rhs = std::move(rhs);
  return make(std::move(n));
}

LiaPtr eq(LinearTerm l, LinearTerm r) { return atom(LiaRel::Eq, std::move(l), std::move(r)); }
LiaPtr ne(LinearTerm l, LinearTerm r) { return lnot(eq(std::move(l), std::move(r))); }
LiaPtr lt(LinearTerm l, LinearTerm r) { return atom(LiaRel::Lt, std::move(l), std::move(r)); }
LiaPtr le(LinearTerm l, LinearTerm r) { return atom(LiaRel::Le, std::move(l), std::move(r)); }
LiaPtr gt(LinearTerm l, LinearTerm r) { return atom(LiaRel::Lt, std::move(r), std::move(l)); }
LiaPtr ge(LinearTerm l, LinearTerm r) { return atom(LiaRel::Le, std::move(r), std::move(l)); }

LiaPtr lnot(LiaPtr a)
{
  switch (a->kind) {
    case LiaNode::Kind::True: return false_node();
    case LiaNode::Kind::False: return true_node();
    case LiaNode::Kind::Not: return a->args.front();
    default: break;
  }
  LiaNode n;
  n.kind = LiaNode::Kind::Not;
  n.args.push_back(std::move(a));
  return make(std::move(n));
}

LiaPtr land(std::vector<LiaPtr> args) { return junction(LiaNode::Kind::And, std::move(args)); }
LiaPtr lor(std::vector<LiaPtr> args) { return junction(LiaNode::Kind::Or, std::move(args)); }
LiaPtr land(LiaPtr a, LiaPtr b) { return land(std::vector<LiaPtr>{std::move(a), std::move(b)}); }
LiaPtr lor(LiaPtr a, LiaPtr b) { return lor(std::vector<LiaPtr>{std::move(a), std::move(b)}); }
LiaPtr implies(LiaPtr a, LiaPtr b) { return lor(lnot(std::move(a)), std::move(b)); }

LiaPtr iff(LiaPtr a, LiaPtr b)
{
  return land(implies(a, b), implies(b, a));
}

LiaPtr between(LinearTerm lo, LinearTerm t, LinearTerm hi)
{
  return land(le(std::move(lo), t), le(t, std::move(hi)));
}

}  // namespace lia

// ---------------------------------------------------------------------------
// LiaFormula

const std::string &LiaFormula::declare(const std::string &name)
{
  if (declared_.insert(name).second) {
    vars.push_back(name);
  }
  return name;
}

void LiaFormula::add(LiaPtr a)
{
  if (a->kind != LiaNode::Kind::True) {
    assertions.push_back(std::move(a));
  }
}

void LiaFormula::append(const LiaFormula &other)
{
  for (const auto &v : other.vars) {
    declare(v);
  }
  for (const auto &a : other.assertions) {
    add(a);
  }
}

std::size_t LiaFormula::size() const
{
  std::function<std::size_t(const LiaNode &)> count = [&](const LiaNode &n) {
    std::size_t s = 1;
    for (const auto &a : n.args) {
      s += count(*a);
    }
    return s;
  };
  std::size_t total = 0;
  for (const auto &a : assertions) {
    total += count(*a);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Evaluation

Integer eval_lia(const LinearTerm &t, const LiaModel &m)
{
  Integer v = t.constant();
  for (const auto &[name, c] : t.coeffs()) {
    auto it = m.find(name);
    if (it == m.end()) {
      throw MissingVariable(name);
    }
    v = checked_add(v, checked_mul(c, it->second));
  }
  return v;
}

bool eval_lia(const LiaPtr &f, const LiaModel &m)
{
  switch (f->kind) {
    case LiaNode::Kind::True: return true;
    case LiaNode::Kind::False: return false;
    case LiaNode::Kind::Atom: {
      Integer l = eval_lia(f->lhs, m);
      Integer r = eval_lia(f->rhs, m);
      switch (f->rel) {
        case LiaRel::Eq: return l == r;
        case LiaRel::Lt: return l < r;
        case LiaRel::Le: return l <= r;
      }
      return false;
    }
    case LiaNode::Kind::Not: return !eval_lia(f->args.front(), m);
    case LiaNode::Kind::And:
      for (const auto &a : f->args) {
        if (!eval_lia(a, m)) {
          return false;
        }
      }
      return true;
    case LiaNode::Kind::Or:
      for (const auto &a : f->args) {
        if (eval_lia(a, m)) {
          return true;
        }
      }
      return false;
  }
  return false;
}

bool eval_lia(const LiaFormula &f, const LiaModel &m)
{
  for (const auto &v : f.vars) {
    if (!m.count(v)) {
      throw MissingVariable(v);
    }
  }
  return std::all_of(f.assertions.begin(), f.assertions.end(),
                     [&](const LiaPtr &a) { return eval_lia(a, m); });
}

bool equal(const LiaNode &a, const LiaNode &b)
{
  if (a.kind != b.kind || a.args.size() != b.args.size()) {
    return false;
  }
  if (a.kind == LiaNode::Kind::Atom
      && (a.rel != b.rel || a.lhs != b.lhs || a.rhs != b.rhs)) {
    return false;
  }
  for (std::size_t k = 0; k < a.args.size(); ++k) {
    if (a.args[k] != b.args[k] && !equal(*a.args[k], *b.args[k])) {
      return false;
    }
  }
  return true;
}

bool equal(const LiaFormula &a, const LiaFormula &b)
{
  if (a.vars != b.vars || a.assertions.size() != b.assertions.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.assertions.size(); ++k) {
    if (!equal(*a.assertions[k], *b.assertions[k])) {
      return false;
    }
  }
  return true;
}

void collect_vars(const LiaPtr &f, std::set<std::string> &out)
{
  if (f->kind == LiaNode::Kind::Atom) {
    for (const auto *t : {&f->lhs, &f->rhs}) {
      for (const auto &[name, c] : t->coeffs()) {
        out.insert(name);
      }
    }
  }
  for (const auto &a : f->args) {
    collect_vars(a, out);
  }
}

// ---------------------------------------------------------------------------
// SMT-LIB2 printing

namespace {

bool simple_symbol_char(char c)
{
  return std::isalnum(static_cast<unsigned char>(c))
         || std::string_view("~!@$%^&*_-+=<>.?/").find(c)
                != std::string_view::npos;
}

bool reserved(const std::string &s)
{
  static const std::set<std::string> words = {
      "and",  "or",    "not",   "true", "false", "let",  "forall",
      "exists", "assert", "ite", "par", "_",     "!",    "as",
      "distinct", "=>", "Int", "Bool", "declare-const", "declare-fun"};
  return words.count(s) > 0;
}

std::string numeral(Integer n)
{
  if (n >= 0) {
    return std::to_string(n);
  }
  // Avoid negating INT64_MIN.
  std::string digits = std::to_string(n).substr(1);
  return "(- " + digits + ")";
}

void print_term(std::ostream &os, const LinearTerm &t)
{
  std::vector<std::string> parts;
  for (const auto &[name, c] : t.coeffs()) {
    if (c == 1) {
      parts.push_back(smt_symbol(name));
    } else if (c == -1) {
      parts.push_back("(- " + smt_symbol(name) + ")");
    } else {
      parts.push_back("(* " + numeral(c) + " " + smt_symbol(name) + ")");
    }
  }
  if (t.constant() != 0 || parts.empty()) {
    parts.push_back(numeral(t.constant()));
  }
  if (parts.size() == 1) {
    os << parts.front();
    return;
  }
  os << "(+";
  for (const auto &p : parts) {
    os << ' ' << p;
  }
  os << ')';
}

void print_formula(std::ostream &os, const LiaNode &n)
{
  switch (n.kind) {
    case LiaNode::Kind::True: os << "true"; return;
    case LiaNode::Kind::False: os << "false"; return;
    case LiaNode::Kind::Atom:
      os << (n.rel == LiaRel::Eq ? "(= " : n.rel == LiaRel::Lt ? "(< " : "(<= ");
      print_term(os, n.lhs);
      os << ' ';
      print_term(os, n.rhs);
      os << ')';
      return;
    case LiaNode::Kind::Not:
      os << "(not ";
      print_formula(os, *n.args.front());
      os << ')';
      return;
    case LiaNode::Kind::And:
    case LiaNode::Kind::Or:
      os << (n.kind == LiaNode::Kind::And ? "(and" : "(or");
      for (const auto &a : n.args) {
        os << ' ';
        print_formula(os, *a);
      }
      os << ')';
      return;
  }
}

}  // namespace

std::string smt_symbol(const std::string &name)
{
  bool simple = !name.empty()
                && !std::isdigit(static_cast<unsigned char>(name.front()))
                && std::all_of(name.begin(), name.end(), simple_symbol_char)
                && !reserved(name);
  return simple ? name : "|" + name + "|";
}

std::string to_smtlib(const LinearTerm &t)
{
  std::ostringstream os;
  print_term(os, t);
  return os.str();
}

std::string to_smtlib(const LiaPtr &f)
{
  std::ostringstream os;
  print_formula(os, *f);
  return os.str();
}

std::string to_smtlib(const LiaFormula &f, bool with_get_model)
{
  std::ostringstream os;
  os << "(set-logic QF_LIA)\n";
  for (const auto &v : f.vars) {
    os << "(declare-const " << smt_symbol(v) << " Int)\n";
  }
  for (const auto &a : f.assertions) {
    os << "(assert ";
    print_formula(os, *a);
    os << ")\n";
  }
  os << "(check-sat)\n";
  if (with_get_model) {
    os << "(get-model)\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SMT-LIB2 parsing

namespace {

// SMT-LIB quoted symbols may contain characters the AFL reader does not
// accept, so this module has its own small tokenizer.
struct SmtSexp
{
  bool is_atom = true;
  std::string atom;
  std::vector<SmtSexp> items;
};

class SmtReader
{
public:
  explicit SmtReader(std::string_view text) : text_(text) {}

  std::vector<SmtSexp> all()
  {
    std::vector<SmtSexp> out;
    skip();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip();
    }
    return out;
  }

private:
  void skip()
  {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') {
          ++pos_;
        }
      } else {
        break;
      }
    }
  }

  SmtSexp read()
  {
    skip();
    if (pos_ >= text_.size()) {
      throw SmtParseError("unexpected end of input");
    }
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      SmtSexp list;
      list.is_atom = false;
      for (;;) {
        skip();
        if (pos_ >= text_.size()) {
          throw SmtParseError("unterminated list");
        }
        if (text_[pos_] == ')') {
          ++pos_;
          return list;
        }
        list.items.push_back(read());
      }
    }
    if (c == ')') {
      throw SmtParseError("unexpected ')'");
    }
    SmtSexp a;
    if (c == '|') {
      auto close = text_.find('|', pos_ + 1);
      if (close == std::string_view::npos) {
        throw SmtParseError("unterminated quoted symbol");
      }
      a.atom = std::string(text_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return a;
    }
    if (c == '"') {
      auto close = text_.find('"', pos_ + 1);
      if (close == std::string_view::npos) {
        throw SmtParseError("unterminated string");
      }
      a.atom = std::string(text_.substr(pos_, close - pos_ + 1));
      pos_ = close + 1;
      return a;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')'
          || d == ';') {
        break;
      }
      ++pos_;
    }
    a.atom = std::string(text_.substr(start, pos_ - start));
    return a;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool is_head(const SmtSexp &s, std::string_view h)
{
  return !s.is_atom && !s.items.empty() && s.items.front().is_atom
         && s.items.front().atom == h;
}

LinearTerm parse_term(const SmtSexp &s)
{
  if (s.is_atom) {
    if (auto n = parse_integer(s.atom)) {
      return LinearTerm(*n);
    }
    return LinearTerm::var(s.atom);
  }
  if (s.items.empty() || !s.items.front().is_atom) {
    throw SmtParseError("malformed term");
  }
  const std::string &head = s.items.front().atom;
  const std::size_t n = s.items.size() - 1;
  if (head == "+") {
    LinearTerm t;
    for (std::size_t k = 1; k < s.items.size(); ++k) {
      t += parse_term(s.items[k]);
    }
    return t;
  }
  if (head == "-" && n == 1) {
    return parse_term(s.items[1]) * -1;
  }
  if (head == "-" && n >= 2) {
    LinearTerm t = parse_term(s.items[1]);
    for (std::size_t k = 2; k < s.items.size(); ++k) {
      t -= parse_term(s.items[k]);
    }
    return t;
  }
  if (head == "*" && n == 2) {
    LinearTerm a = parse_term(s.items[1]);
    LinearTerm b = parse_term(s.items[2]);
    if (a.is_constant()) {
      return b * a.constant();
    }
    if (b.is_constant()) {
      return a * b.constant();
    }
    throw SmtParseError("nonlinear multiplication");
  }
  throw SmtParseError("unsupported term operator: " + head);
}

LiaPtr parse_formula(const SmtSexp &s)
{
  if (s.is_atom) {
    if (s.atom == "true") {
      return lia::truth();
    }
    if (s.atom == "false") {
      return lia::falsity();
    }
    throw SmtParseError("unexpected atom in formula: " + s.atom);
  }
  if (s.items.empty() || !s.items.front().is_atom) {
    throw SmtParseError("malformed formula");
  }
  const std::string &head = s.items.front().atom;
  std::vector<LiaPtr> args;
  auto sub = [&]() {
    for (std::size_t k = 1; k < s.items.size(); ++k) {
      args.push_back(parse_formula(s.items[k]));
    }
  };
  if (head == "and") {
    sub();
    return lia::land(std::move(args));
  }
  if (head == "or") {
    sub();
    return lia::lor(std::move(args));
  }
  if (head == "not" && s.items.size() == 2) {
    return lia::lnot(parse_formula(s.items[1]));
  }
  if (head == "=>" && s.items.size() == 3) {
    return lia::implies(parse_formula(s.items[1]), parse_formula(s.items[2]));
  }
  if (s.items.size() == 3) {
    LinearTerm l = parse_term(s.items[1]);
    LinearTerm r = parse_term(s.items[2]);
    if (head == "=") return lia::eq(l, r);
    if (head == "<") return lia::lt(l, r);
    if (head == "<=") return lia::le(l, r);
    if (head == ">") return lia::gt(l, r);
    if (head == ">=") return lia::ge(l, r);
    if (head == "distinct") return lia::ne(l, r);
  }
  throw SmtParseError("unsupported formula operator: " + head);
}

}  // namespace

LiaFormula parse_smtlib(std::string_view text)
{
  LiaFormula f;
  for (const auto &cmd : SmtReader(text).all()) {
    if (is_head(cmd, "declare-const") && cmd.items.size() == 3
        && cmd.items[1].is_atom && cmd.items[2].is_atom
        && cmd.items[2].atom == "Int") {
      f.declare(cmd.items[1].atom);
    } else if (is_head(cmd, "declare-fun") && cmd.items.size() == 4
               && cmd.items[1].is_atom && !cmd.items[2].is_atom
               && cmd.items[2].items.empty() && cmd.items[3].is_atom
               && cmd.items[3].atom == "Int") {
      f.declare(cmd.items[1].atom);
    } else if (is_head(cmd, "assert") && cmd.items.size() == 2) {
      f.add(parse_formula(cmd.items[1]));
    } else if (is_head(cmd, "set-logic") || is_head(cmd, "set-option")
               || is_head(cmd, "set-info") || is_head(cmd, "check-sat")
               || is_head(cmd, "get-model") || is_head(cmd, "exit")) {
      continue;
    } else {
      throw SmtParseError("unsupported command");
    }
  }
  return f;
}

}  // namespace afl
