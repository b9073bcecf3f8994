#pragma once

#include "afl/ast.h"

namespace afl {

/// Prefixes of variables introduced by normalization. A numeric suffix is
/// appended, skipping any name that is already declared.
inline constexpr const char *kWildcardPrefix = "%w";
inline constexpr const char *kHoistPrefix = "%u";
inline constexpr const char *kArrayHoistPrefix = "%z";

/// Rewrites a formula into the core fragment:
///  - integer terms use only Const, Var, Add, Scale, Read, Len;
///  - comparisons between integer terms are only `=` and `<`;
///  - Boolean structure uses only Not and And (true is `0 = 0`);
///  - guards compare with `<`, `>`, `=`, `distinct` only;
///  - every wildcard is a fresh integer variable;
///  - no fold occurs inside the initial vector of another fold;
///  - at most one side of an array equality is a write.
/// The result is equisatisfiable with the input, and normalize is idempotent.
Formula normalize(const Formula &f);

/// True iff the formula is already in the core fragment described above.
bool is_normalized(const Formula &f);

}  // namespace afl
