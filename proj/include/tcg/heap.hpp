#pragma once

#include <functional>
#include <stdexcept>

#include "tcg/ir.hpp"
#include "tcg/store.hpp"

namespace tcg {

enum class ExecMode { Ground, Symbolic };
enum class AliasMode { Off, On };

/// Raised in ground mode when a reference has no location in the heap.
struct DanglingReference : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HeapContext {
  Store& store;
  const ClassTable& classes;
  ExecMode mode = ExecMode::Symbolic;
  AliasMode alias = AliasMode::Off;
};

using Cont = std::function<void()>;

// Heap terms are Prolog lists of (Key, Cell) pairs, each pair being the
// compound ','(Key, Cell). Cells are object(T, [field(FN, V), ...]) or
// array(T, Len, Elems). Keys are Ints or, in symbolic mode, Vars.
//
// Every builtin below is written in continuation-passing style: k runs
// once per solution with the store reflecting that solution, and the store
// is restored to its entry state before the builtin returns.

Term make_loc(const Term& key, const Term& cell);
Term make_object(const std::string& cls, const std::vector<std::pair<std::string, Term>>& fields);

/// Zero value of a declared type: 0 for int/bool, null otherwise.
Term zero_value(const Term& type);

void get_cell(HeapContext& ctx, const Term& heap, const Term& key, const std::function<void(const Term&)>& k);
/// Heap with the location for key replaced; throws std::logic_error when absent.
Term set_cell(HeapContext& ctx, const Term& heap, const Term& key, const Term& cell);

void subclass(HeapContext& ctx, const Term& t, const std::string& c, const Cont& k);

void new_object(HeapContext& ctx, const Term& h, const Term& cls, const Term& ref, const Term& h_out, const Cont& k);
void new_array(HeapContext& ctx, const Term& h, const Term& type, const Term& len, const Term& ref, const Term& h_out,
               const Cont& k);
void length_of(HeapContext& ctx, const Term& h, const Term& ref, const Term& out, const Cont& k);
void get_field(HeapContext& ctx, const Term& h, const Term& ref, const Term& fsig, const Term& out, const Cont& k);
void set_field(HeapContext& ctx, const Term& h, const Term& ref, const Term& fsig, const Term& data,
               const Term& h_out, const Cont& k);
void get_array(HeapContext& ctx, const Term& h, const Term& ref, const Term& idx, const Term& out, const Cont& k);
void set_array(HeapContext& ctx, const Term& h, const Term& ref, const Term& idx, const Term& data,
               const Term& h_out, const Cont& k);
void type_guard(HeapContext& ctx, const Term& h, const Term& ref, const Term& type, const Cont& k);

}  // namespace tcg
