#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afl {

/// Byte range of a construct in the source text, plus the 1-based line and
/// column of its first byte. Default-constructed spans mark synthesized nodes.
struct SourceSpan
{
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t line = 0;
  std::size_t column = 0;

  bool valid() const { return line != 0; }
  std::string to_string() const;
};

class AflException : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/// Integer overflow in checked arithmetic; never silently wraps.
class OverflowError : public AflException
{
 public:
  using AflException::AflException;
};

}  // namespace afl
