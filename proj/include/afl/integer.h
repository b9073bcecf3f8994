#pragma once

#include <cstdint>
#include <string>

#include "afl/error.h"

namespace afl {

/// Integers are 64-bit; every arithmetic operation is overflow-checked.
using Integer = std::int64_t;

inline Integer checked_add(Integer a, Integer b)
{
  Integer r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in " + std::to_string(a) + " + "
                        + std::to_string(b));
  }
  return r;
}

inline Integer checked_sub(Integer a, Integer b)
{
  Integer r;
  if (__builtin_sub_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in " + std::to_string(a) + " - "
                        + std::to_string(b));
  }
  return r;
}

inline Integer checked_mul(Integer a, Integer b)
{
  Integer r;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in " + std::to_string(a) + " * "
                        + std::to_string(b));
  }
  return r;
}

inline Integer checked_neg(Integer a) { return checked_sub(0, a); }

}  // namespace afl
