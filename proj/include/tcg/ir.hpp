#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcg/store.hpp"
#include "tcg/term.hpp"

namespace tcg {

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  SourcePos pos;
  std::string message;

  bool is_error() const { return severity == Severity::Error; }
  std::string str() const;
};

bool has_errors(const std::vector<Diagnostic>& ds);

// Types are terms: int, bool, a class-name atom, or array(T).
struct FieldDecl {
  std::string name;
  Term type;
};

struct ClassInfo {
  std::string name;
  std::optional<std::string> super;
  std::vector<FieldDecl> fields;
};

class ClassTable {
 public:
  /// Classes every program may allocate as exception objects.
  static const std::vector<std::string>& builtin_exceptions();

  ClassTable();

  /// Replaces an existing entry of the same name.
  void add(ClassInfo c);
  const ClassInfo* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  const std::vector<ClassInfo>& classes() const { return classes_; }

  /// Reflexive-transitive subclass test.
  bool is_subclass(std::string_view sub, std::string_view super) const;
  /// `c` first, then every descendant in declaration order.
  std::vector<std::string> subclasses_of(std::string_view c) const;
  /// Declared fields of c and its ancestors, superclass fields first.
  std::vector<FieldDecl> all_fields(std::string_view c) const;
  /// Field visible in c (declared in c or an ancestor).
  const FieldDecl* lookup_field(std::string_view c, std::string_view field) const;
  /// Name of a class on a superclass cycle, if any.
  std::optional<std::string> find_cycle() const;

 private:
  std::vector<ClassInfo> classes_;
};

struct MethodInfo {
  std::string pred;  // "Class.method"
  std::string cls;
  std::string name;
  std::vector<std::string> param_names;  // informational; includes "this"
  std::vector<Term> param_types;         // includes the receiver first
  std::optional<Term> ret_type;          // nullopt for void
};

enum class LitKind {
  Compare,   // [lhs, rhs] with op
  RefNeq,    // [a, b]
  TypeGuard, // [H, Ref, T]
  Assign,    // [Var, Expr]
  Call,      // [ArgsIn, ArgsOut, Hin, Hout, EF] with pred
  NewObject, // [H, C, Ref, H']
  NewArray,  // [H, T, Len, Ref, H']
  Length,    // [H, Ref, Var]
  GetField,  // [H, Ref, C:FN, Var]
  SetField,  // [H, Ref, C:FN, Data, H']
  GetArray,  // [H, Ref, I, Var]
  SetArray,  // [H, Ref, I, Data, H']
  Unify,     // [a, b]       preconditions only
  Member,    // [X, List]    preconditions only
  NoShare,   // [a, b]       delayed property
  Acyclic,   // [a]          delayed property
};

struct Literal {
  LitKind kind = LitKind::Call;
  RelOp op = RelOp::Eq;
  std::string pred;
  std::vector<Term> args;
  SourcePos pos;

  bool is_guard_kind() const {
    return kind == LitKind::Compare || kind == LitKind::RefNeq || kind == LitKind::TypeGuard;
  }
  bool is_delayed_property() const { return kind == LitKind::NoShare || kind == LitKind::Acyclic; }
};

/// Builtin name and arity for a literal kind ("" for Compare/Assign/Call).
std::string_view builtin_name(LitKind k);

struct Clause {
  Term args_in;   // list term
  Term args_out;  // list term
  Term h_in;
  Term h_out;
  Term exflag;
  std::optional<Literal> guard;
  std::vector<Literal> body;
  /// Clause-local variables are 0..var_names.size()-1.
  std::vector<std::string> var_names;
  SourcePos pos;

  std::size_t num_vars() const { return var_names.size(); }
  /// Head followed by the literals, as one term list (for renaming and scans).
  std::vector<Term> all_terms() const;
};

struct Predicate {
  std::string name;
  std::vector<Clause> clauses;
};

struct Program {
  std::vector<Predicate> predicates;
  ClassTable classes;
  std::vector<MethodInfo> entries;

  const Predicate* find(std::string_view name) const;
  Predicate& get_or_add(const std::string& name);
  const MethodInfo* entry(std::string_view pred) const;

 private:
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};

ParseResult parse_ir(std::string_view text);

/// Parses a comma-separated literal list (no trailing period needed).
/// Variable names are looked up in / added to `names`, whose index is the
/// variable id.
std::optional<std::vector<Literal>> parse_goal(std::string_view text, std::vector<std::string>& names,
                                               std::vector<Diagnostic>& diags);

void print_literal(std::ostream& os, const Literal& l, const std::vector<std::string>* names);
void print_clause(std::ostream& os, const std::string& pred, const Clause& c);
void print_program(std::ostream& os, const Program& p);
std::string program_to_string(const Program& p);
std::string type_to_string(const Term& t);

/// Renumbers clause variables in first-occurrence order (head, guard, body)
/// and drops unused names.
void normalize_vars(Clause& c);

/// Structural equality up to consistent renaming of clause variables.
bool clauses_alpha_equal(const Clause& a, const Clause& b);
bool programs_equal(const Program& a, const Program& b);

std::vector<Diagnostic> validate(const Program& p);

}  // namespace tcg
