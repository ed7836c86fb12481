#pragma once

// Direct tree-walking semantics of the source language, used as a
// differential oracle for compiled clause IR.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tcg/minioo.hpp"

namespace refi {

struct Cell {
  bool is_array = false;
  std::string cls;                                    // object class
  std::vector<std::pair<std::string, tcg::Term>> fields;
  tcg::Term elem_type;                                // array
  std::vector<tcg::Term> elems;
};

using Heap = std::map<std::int64_t, Cell>;

struct Outcome {
  bool aborted = false;          // step limit hit
  std::string exc;               // empty when the call returned normally
  std::int64_t exc_ref = -1;
  std::optional<tcg::Term> ret;  // non-void normal return
  Heap heap;
};

/// Runs `method` on args (receiver first) over `heap`.
Outcome run(const tcg::moo::SourceAst& ast, const tcg::moo::MethodDecl& method, const std::vector<tcg::Term>& args,
            Heap heap, long step_limit = 200000);

/// Random well-typed inputs (receiver first) with sharing and cycles.
struct Input {
  std::vector<tcg::Term> args;
  Heap heap;
};
Input random_input(const tcg::moo::SourceAst& ast, const tcg::moo::MethodDecl& method, std::mt19937& rng);

tcg::Term heap_term(const Heap& h);

}  // namespace refi
