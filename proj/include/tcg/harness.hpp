#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcg/engine.hpp"

namespace tcg {

/// Parses "LO..HI".
std::optional<Bounds> parse_bounds(std::string_view text);

// ---- test cases ---------------------------------------------------------

struct TestCase {
  int id = 0;
  std::string entry;
  std::vector<Term> input_args;
  Term input_heap;  // closed, ground
  std::vector<Term> output_args;
  std::optional<Term> output_heap;  // absent when exceptional
  std::string exflag = "ok";        // "ok" or the exception class
  std::vector<TraceStep> trace;

  bool exceptional() const { return exflag != "ok"; }
};

struct Grounding {
  std::optional<TestCase> test;
  std::string error;               // why grounding failed
  bool properties_hold = true;     // delayed level-2 literals on the input heap
  Term full_output_heap;           // output heap even for exceptional cases
};

/// Labels and closes a Success resultant whose root is an entry atom.
Grounding ground_resultant(const Resultant& r, const Program& prog, const MethodInfo& method);

// ---- ground heap queries --------------------------------------------------

/// Locations of a closed ground heap, keyed by reference.
std::map<std::int64_t, Term> heap_map(const Term& heap);
/// Keys reachable from a value (r(K), a bare key, or null) in a ground heap.
std::set<std::int64_t> reachable(const std::map<std::int64_t, Term>& heap, const Term& from);
bool noshare(const Term& heap, const Term& a, const Term& b);
/// False when a cycle is reachable from `a`.
bool acyclic(const Term& heap, const Term& a);

/// Equality of values up to a bijective renaming of locations reachable
/// from the roots; locations unreachable from the roots are ignored.
bool equivalent_states(const std::vector<Term>& roots_a, const Term& heap_a, const std::vector<Term>& roots_b,
                       const Term& heap_b, std::string* why = nullptr);

// ---- replay and coverage ---------------------------------------------------

struct ReplayResult {
  bool pass = false;
  std::string diff;
  std::vector<InstrId> exercised;
};

/// Ground execution of the entry on the case's inputs, compared against
/// its recorded trace, outputs and exception flag.
ReplayResult replay_ground(const TestCase& tc, const Program& prog, int step_limit = 1000000);

struct Coverage {
  std::size_t exercised = 0;
  std::size_t reachable = 0;
  double percent() const { return reachable == 0 ? 0.0 : 100.0 * static_cast<double>(exercised) / static_cast<double>(reachable); }
};

/// Guard and body literal occurrences of every clause reachable from `entry`.
std::set<InstrId> reachable_instructions(const Program& prog, const std::string& entry);
Coverage measure_coverage(const std::vector<std::vector<InstrId>>& exercised, const Program& prog,
                          const std::string& entry);

// ---- preconditions -----------------------------------------------------------

/// Level-1 literals run before the entry call; level-2 properties are
/// appended as delayed literals and checked on grounded inputs.
struct Precondition {
  std::vector<Literal> level1;
  std::vector<Literal> level2;
  std::vector<std::string> names;  // variable names; the first five are reserved
};

/// Names bound to the entry atom's arguments.
const std::vector<std::string>& reserved_precondition_names();
std::optional<Precondition> parse_precondition(std::string_view text, std::vector<Diagnostic>& diags);
/// Goal for an entry under a precondition (identity for an empty one).
std::vector<Literal> apply_precondition(const Precondition& pre, Store& store, const EntryGoal& entry);

// ---- suites --------------------------------------------------------------------

struct SuiteOptions {
  Criterion criterion;
  AliasMode alias = AliasMode::Off;
  Bounds bounds;
  std::optional<Precondition> pre;
  bool replay = true;
};

struct Suite {
  std::string entry;
  SuiteOptions options;
  std::vector<TestCase> cases;
  std::vector<ReplayResult> replays;  // parallel to cases when replayed
  std::size_t stopped = 0;            // criterion stops (not emitted)
  std::size_t ungroundable = 0;
  std::size_t discarded = 0;          // level-2 property failures
  Coverage coverage;

  bool all_replays_pass() const;
};

/// Throws std::invalid_argument for an unknown entry.
Suite generate_suite(const Program& prog, const std::string& entry, const SuiteOptions& opts);

// ---- output --------------------------------------------------------------------

std::string suite_to_json(const Suite& s, int indent = 2);
std::string suite_to_text(const Suite& s);
/// Compact rendering of a ground value with its reachable heap part.
std::string render_value(const Term& v, const Term& heap);

}  // namespace tcg
