#pragma once

// Reconstruction of AFL models from models of the encoding, and the text
// format used to store them:
//
//   (model (a (seq 0 0 1 1)) (x 3) (y -2))
//
// Arrays are written as `(name (seq v ...))`, integers as `(name v)`. Models
// of formulas with wildcards also list the helper variables of the
// normalized formula (names starting with `%`).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "afl/encoder.h"
#include "afl/evaluator.h"

namespace afl {

class ModelGenError : public AflException
{
public:
  using AflException::AflException;
};

class NoEulerianPath : public ModelGenError
{
public:
  using ModelGenError::ModelGenError;
};

/// Eulerian path from `nfa.init` to `sink` in the multigraph with
/// `counts[e]` copies of edge e. Returns edge ids in path order.
std::vector<std::size_t> eulerian_path(const Nfa &nfa,
                                       const std::vector<Integer> &counts,
                                       std::size_t sink);

/// The run of one lockstep group: edge ids of its mode graph, in order,
/// ending in the accepting state selected by the sink variables.
std::vector<std::size_t> extract_run(const GroupEncoding &group,
                                     const LiaModel &m);

struct ModelGenLimits
{
  /// Longest array modelgen is willing to materialize.
  Integer max_length = 10'000'000;
};

/// Builds an interpretation of the normalized formula's variables: integers
/// from the model, fold-free arrays from their cell variables and lockstep
/// arrays from the witnesses along the run of their group.
Interpretation synthesize_arrays(const Formula &normalized,
                                 const Encoding &enc,
                                 const LiaModel &m,
                                 const ModelGenLimits &limits = {});

/// Restricts `sigma` to the variables declared in `f`, filling missing ones
/// with 0 or the empty array.
Interpretation restrict_to(const Formula &f, const Interpretation &sigma);

/// True iff normalizing `f` introduces variables for wildcards. Such
/// formulas are evaluated in normalized form, and their models carry values
/// for the helper variables.
bool has_wildcards(const Formula &f);

/// True iff the evaluator accepts `sigma` for `f` (for `f` with wildcards:
/// for its normalized form); `diagnostic` receives the evaluation error, if
/// any.
bool validate_model(const Formula &f,
                    const Interpretation &sigma,
                    std::string *diagnostic = nullptr);

std::string print_model(const Interpretation &sigma);

class ModelParseError : public AflException
{
public:
  using AflException::AflException;
};

/// Parses a model document; a leading `sat` line, as printed by
/// `afl solve --model`, is skipped.
Interpretation parse_model_text(std::string_view text);

}  // namespace afl
