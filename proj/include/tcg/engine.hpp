#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcg/heap.hpp"
#include "tcg/ir.hpp"
#include "tcg/store.hpp"

namespace tcg {

/// One instruction occurrence: a guard or body literal of a clause.
/// `clause` is 1-based; `lit` indexes the guard (if any) followed by the body.
struct InstrId {
  std::string pred;
  int clause = 0;
  int lit = 0;
  auto operator<=>(const InstrId&) const = default;
};

struct TraceStep {
  std::string pred;
  int clause = 0;  // 1-based
  bool operator==(const TraceStep&) const = default;
  auto operator<=>(const TraceStep&) const = default;
};

std::string trace_to_string(const std::vector<TraceStep>& trace);

enum class StopReason { Success, CriterionStop, Failure };
const char* stop_reason_name(StopReason r);

struct Criterion {
  enum class Kind { BlockK, DepthK };
  Kind kind = Kind::BlockK;
  int k = 2;

  static std::optional<Criterion> parse(std::string_view spec);
  std::string str() const;
};

/// Covering-ancestor chain of a goal literal, innermost predicate first.
struct Ancestor {
  std::string pred;
  std::shared_ptr<const Ancestor> up;
};
using AncestorChain = std::shared_ptr<const Ancestor>;

int ancestor_count(const AncestorChain& chain, const std::string& pred);

struct Resultant {
  Term root;
  std::vector<Literal> residual;
  std::vector<Literal> delayed;  // level-2 properties left for the harness
  Store store;
  std::vector<TraceStep> trace;
  std::vector<InstrId> exercised;
  StopReason stop = StopReason::Success;
  int steps = 0;
};

struct EngineOptions {
  ExecMode mode = ExecMode::Symbolic;
  AliasMode alias = AliasMode::Off;
  Criterion criterion;
  bool skip_delayed = true;
  bool record_failures = false;
  std::size_t max_resultants = 100000;
};

/// The literal positions picked by the selection rule. `index` is the
/// position of the selected literal; nullopt when no literal is selectable.
std::optional<std::size_t> select_literal(const std::vector<Literal>& goal, bool skip_delayed);

struct EntryGoal {
  Term atom;  // Pred(ArgsIn, ArgsOut, Hin, Hout, EF)
  Term args_in, args_out, h_in, h_out, ef;
  std::vector<Term> params;
  Literal call;
};

class Engine {
 public:
  Engine(const Program& prog, EngineOptions opts);

  /// Entry atom with fresh variables; arity taken from the method signature
  /// when present, else from the first clause head.
  EntryGoal make_entry(Store& store, const std::string& pred) const;

  /// Depth-first unfolding of `goal` from the current store. The store is
  /// left as it was on return.
  std::vector<Resultant> unfold(Store& store, const Term& root, const std::vector<Literal>& goal);

  /// One reduction of a call literal: k(clause, renamed body) per applicable clause.
  void reduce_call(Store& store, const Literal& call,
                   const std::function<void(int, const std::vector<Literal>&)>& k);

  /// Executes a builtin literal, k once per solution.
  void exec_builtin(Store& store, const Literal& lit, const Cont& k);

  /// True when some ground call had more than one applicable clause.
  bool determinism_violated() const { return nondeterministic_; }
  const EngineOptions& options() const { return opts_; }

 private:
  struct Run;
  const Program& prog_;
  EngineOptions opts_;
  bool nondeterministic_ = false;
};

}  // namespace tcg
