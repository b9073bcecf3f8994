#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "afl/ast.h"

namespace afl {

class ParseError : public AflException
{
public:
  enum class Kind
  {
    Lexical,
    Syntax,
    UndeclaredIdentifier,
    SortMismatch,
    ForbiddenConstruct,
    IllFormed
  };

  ParseError(Kind kind, std::string message, SourceSpan span);

  Kind kind() const { return kind_; }
  const SourceSpan &span() const { return span_; }
  const std::string &detail() const { return detail_; }

private:
  Kind kind_;
  SourceSpan span_;
  std::string detail_;
};

std::string to_string(ParseError::Kind kind);

/// A generic s-expression with source positions.
struct Sexp
{
  bool is_atom = true;
  std::string atom;
  std::vector<Sexp> items;
  SourceSpan span;

  bool is(std::string_view name) const { return is_atom && atom == name; }
  /// A list whose first element is the given atom.
  bool is_call(std::string_view head) const
  {
    return !is_atom && !items.empty() && items.front().is(head);
  }
  std::string to_string() const;
};

/// Splits text into top-level s-expressions; `;` starts a line comment.
std::vector<Sexp> read_sexps(std::string_view text);

/// Parses a decimal integer atom (optional leading `-`), or returns nullopt.
std::optional<Integer> parse_integer(std::string_view atom);

/// Parses an `.afl` document. Declarations must precede their uses. The
/// returned formula passes `validate`; any violation is reported as a
/// ParseError pointing at the offending node.
Formula parse(std::string_view text);

/// Renders a formula as an `.afl` document; `parse(print(f))` equals f.
std::string print(const Formula &f);

std::string print(const IntTerm &t);
std::string print(const BoolTerm &t);
std::string print(const VectorTerm &t);
std::string print(const ArrayTerm &t);

}  // namespace afl
