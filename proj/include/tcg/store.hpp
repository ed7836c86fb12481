#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcg/term.hpp"

namespace tcg {

enum class RelOp : std::uint8_t { Gt, Lt, Ge, Le, Eq, Ne };

std::string_view relop_symbol(RelOp op);
std::optional<RelOp> relop_from_symbol(std::string_view s);
/// The complementary relation: c holds iff negate(c) does not.
RelOp negate(RelOp op);

/// lhs op rhs over integer expressions built from + - * / mod.
struct ArithConstraint {
  RelOp op;
  Term lhs;
  Term rhs;
};

struct Interval {
  std::int64_t lo;
  std::int64_t hi;
  bool empty() const { return lo > hi; }
  bool contains(std::int64_t v) const { return lo <= v && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Inclusive interval every constrained variable is confined to.
struct Bounds {
  std::int64_t lo = -8;
  std::int64_t hi = 8;
};

/// Integer division truncating toward zero; mod takes the dividend's sign.
/// Returns nullopt on a zero divisor.
std::optional<std::int64_t> int_div(std::int64_t a, std::int64_t b);
std::optional<std::int64_t> int_mod(std::int64_t a, std::int64_t b);

/// Constraint store: a substitution plus a set of finite-domain
/// arithmetic constraints, with a trail so any sequence of operations can
/// be undone to an earlier mark.
///
/// Every mutating operation is transactional: on failure it returns false
/// and leaves the store exactly as it was.
class Store {
 public:
  explicit Store(Bounds bounds = {});

  Term fresh_var();
  /// Reserves `n` consecutive fresh ids and returns the first.
  VarId fresh_block(std::size_t n);
  VarId next_var_id() const { return static_cast<VarId>(bindings_.size()); }

  Term deref(const Term& t) const;
  /// Applies the substitution everywhere inside t.
  Term resolve(const Term& t) const;
  bool is_bound(VarId v) const;

  bool unify(const Term& a, const Term& b);
  /// Identity after dereferencing, without binding anything.
  bool syntactic_eq(const Term& a, const Term& b) const;

  bool post(const ArithConstraint& c);
  /// Binds the first assignment (ascending |value|, negative after positive)
  /// satisfying every constraint; fails without changes if none exists.
  bool label(std::span<const Term> vars);
  /// Calls k once for every value of v (same order as label), with v bound
  /// to it; the store is restored after each call.
  void for_each_value(const Term& v, const std::function<void()>& k);

  /// Current interval of an unbound variable, if it is a constrained one.
  std::optional<Interval> domain(VarId v) const;
  bool is_constrained(VarId v) const;
  const std::vector<ArithConstraint>& constraints() const { return constraints_; }
  Bounds bounds() const { return bounds_; }

  /// Evaluates a ground expression; nullopt when not ground or on x/0.
  std::optional<std::int64_t> eval(const Term& expr) const;
  /// True iff every constraint whose variables are all bound holds.
  bool ground_constraints_hold() const;

  /// Per-derivation counter for concrete heap references.
  std::int64_t ref_counter() const { return ref_counter_; }
  void set_ref_counter(std::int64_t v);

  struct Mark {
    std::size_t trail;
    std::size_t constraints;
    std::size_t vars;
  };
  Mark mark() const;
  void undo(const Mark& m);

  /// Hash of the observable state (bindings, domains, constraints, counter).
  std::uint64_t fingerprint() const;

 private:
  struct TrailEntry {
    enum class Kind : std::uint8_t { Bind, Domain, Counter } kind;
    VarId var;
    Interval old_domain;
    bool old_constrained;
    std::int64_t old_counter;
  };

  void bind(VarId v, const Term& value);
  void set_domain(VarId v, Interval d);
  void make_constrained(VarId v);
  bool occurs(VarId v, const Term& t) const;
  bool unify_rec(const Term& a, const Term& b, bool& touched_fd);
  bool narrow(VarId v, std::int64_t lo, std::int64_t hi, bool& changed);
  bool propagate();
  bool revise(const ArithConstraint& c, bool& changed);
  bool constrain_vars(const Term& expr);
  bool bind_value(const Term& v, std::int64_t value);

  Bounds bounds_;
  std::vector<std::optional<Term>> bindings_;
  std::vector<Interval> domains_;
  std::vector<std::uint8_t> constrained_;
  std::vector<ArithConstraint> constraints_;
  std::vector<TrailEntry> trail_;
  std::int64_t ref_counter_ = 0;
};

}  // namespace tcg
