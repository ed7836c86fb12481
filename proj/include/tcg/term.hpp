#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tcg {

using VarId = std::int64_t;

enum class TermKind : std::uint8_t { Var, Int, Null, Ref, Atom, Compound, Cons, Nil };

/// Immutable, structurally shared term. Copies are cheap (one shared_ptr).
///
/// `Ref` is the grammar's `r(X)` wrapper around a heap key; `Cons`/`Nil`
/// are Prolog lists. Arithmetic expressions and field signatures are
/// ordinary compounds with functors "+", "-", "*", "/", "mod" and ":".
class Term {
 public:
  Term();  // []

  static Term var(VarId id);
  static Term integer(std::int64_t value);
  static Term null();
  static Term ref(Term inner);
  static Term atom(std::string name);
  static Term compound(std::string functor, std::vector<Term> args);
  static Term cons(Term head, Term tail);
  static Term nil();
  static Term list(const std::vector<Term>& items, Term tail = nil());

  TermKind kind() const;
  bool is_var() const { return kind() == TermKind::Var; }
  bool is_int() const { return kind() == TermKind::Int; }
  bool is_atom() const { return kind() == TermKind::Atom; }
  bool is_atom(std::string_view name) const;
  bool is_compound(std::string_view functor, std::size_t arity) const;

  VarId var_id() const;
  std::int64_t int_value() const;
  /// Atom name or compound functor.
  const std::string& name() const;
  /// Children: compound arguments, [inner] for Ref, [head, tail] for Cons.
  std::span<const Term> args() const;
  const Term& arg(std::size_t i) const { return args()[i]; }
  std::size_t arity() const { return args().size(); }

  /// Structural identity without any dereferencing.
  bool identical(const Term& other) const;
  bool same_node(const Term& other) const { return node_ == other.node_; }

 private:
  struct Node;
  explicit Term(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Prints in the concrete clause syntax. `names` maps var id -> name when
/// non-null and the id is in range; other variables print as _G<id>.
void print_term(std::ostream& os, const Term& t, const std::vector<std::string>* names = nullptr);
std::string to_string(const Term& t, const std::vector<std::string>* names = nullptr);
std::ostream& operator<<(std::ostream& os, const Term& t);

/// True when an atom needs quoting to re-parse as the same atom.
bool atom_needs_quotes(std::string_view name);

/// Adds `offset` to every variable id.
Term shift_vars(const Term& t, VarId offset);

/// Collects distinct variable ids in first-occurrence order.
void collect_vars(const Term& t, std::vector<VarId>& out);

/// Element terms of a proper list; returns false for partial or malformed lists.
bool list_items(const Term& t, std::vector<Term>& out);

}  // namespace tcg
