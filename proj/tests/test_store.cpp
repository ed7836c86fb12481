#include <random>

#include "doctest.h"
#include "tcg/store.hpp"

using namespace tcg;

namespace {

Term add(Term a, Term b) { return Term::compound("+", {std::move(a), std::move(b)}); }
Term sub(Term a, Term b) { return Term::compound("-", {std::move(a), std::move(b)}); }
Term mul(Term a, Term b) { return Term::compound("*", {std::move(a), std::move(b)}); }
Term num(std::int64_t v) { return Term::integer(v); }

}  // namespace

TEST_CASE("unify binds and dereferences") {
  Store s;
  Term x = s.fresh_var(), y = s.fresh_var();
  Term fx = Term::compound("f", {x, Term::atom("a")});
  Term fy = Term::compound("f", {num(3), y});
  REQUIRE(s.unify(fx, fy));
  CHECK(s.resolve(x).identical(num(3)));
  CHECK(s.resolve(y).identical(Term::atom("a")));
  CHECK(s.syntactic_eq(fx, fy));
}

TEST_CASE("unify fails on clash and leaves the store untouched") {
  Store s;
  Term x = s.fresh_var();
  auto before = s.fingerprint();
  CHECK_FALSE(s.unify(Term::compound("f", {x, num(1)}), Term::compound("f", {num(2), num(3)})));
  CHECK(s.fingerprint() == before);
  CHECK_FALSE(s.is_bound(x.var_id()));
}

TEST_CASE("occurs check") {
  Store s;
  Term x = s.fresh_var();
  CHECK_FALSE(s.unify(x, Term::compound("f", {x})));
  CHECK_FALSE(s.unify(x, Term::list({num(1)}, x)));
}

TEST_CASE("syntactic equality does not bind") {
  Store s;
  Term x = s.fresh_var(), y = s.fresh_var();
  CHECK_FALSE(s.syntactic_eq(x, y));
  CHECK_FALSE(s.is_bound(x.var_id()));
  CHECK(s.syntactic_eq(Term::ref(x), Term::ref(x)));
  REQUIRE(s.unify(x, y));
  CHECK(s.syntactic_eq(Term::ref(x), Term::ref(y)));
  CHECK(s.syntactic_eq(Term::null(), Term::null()));
}

TEST_CASE("bounds propagation through a linear equation") {
  Store s;
  Term x = s.fresh_var(), y = s.fresh_var();
  REQUIRE(s.post({RelOp::Ge, y, num(0)}));
  REQUIRE(s.post({RelOp::Le, y, num(3)}));
  REQUIRE(s.post({RelOp::Eq, x, add(y, num(1))}));
  auto d = s.domain(x.var_id());
  REQUIRE(d);
  CHECK(d->lo == 1);
  CHECK(d->hi == 4);
}

TEST_CASE("labeling picks the smallest magnitude first") {
  Store s;
  Term x = s.fresh_var();
  REQUIRE(s.post({RelOp::Gt, x, num(0)}));
  REQUIRE(s.post({RelOp::Lt, x, num(3)}));
  Term vars[] = {x};
  REQUIRE(s.label(vars));
  CHECK(s.resolve(x).identical(num(1)));

  Store t;
  Term z = t.fresh_var();
  REQUIRE(t.post({RelOp::Lt, z, num(0)}));
  Term zs[] = {z};
  REQUIRE(t.label(zs));
  CHECK(t.resolve(z).identical(num(-1)));
}

TEST_CASE("unsatisfiable constraints are rejected") {
  Store s;
  Term x = s.fresh_var();
  REQUIRE(s.post({RelOp::Gt, x, num(5)}));
  CHECK_FALSE(s.post({RelOp::Lt, x, num(3)}));
  CHECK_FALSE(s.post({RelOp::Gt, x, num(8)}));
  CHECK(s.post({RelOp::Ne, x, num(6)}));
}

TEST_CASE("a determined equation binds without bounds") {
  Store s;
  Term x = s.fresh_var();
  REQUIRE(s.post({RelOp::Eq, x, mul(num(100), num(3))}));
  CHECK(s.resolve(x).identical(num(300)));
  CHECK(s.post({RelOp::Gt, x, num(299)}));
  CHECK_FALSE(s.post({RelOp::Gt, x, num(300)}));
}

TEST_CASE("division truncates toward zero and division by zero fails") {
  CHECK(*int_div(-7, 2) == -3);
  CHECK(*int_mod(-7, 2) == -1);
  CHECK(*int_mod(7, -2) == 1);
  CHECK_FALSE(int_div(1, 0));
  Store s;
  Term x = s.fresh_var();
  CHECK_FALSE(s.post({RelOp::Eq, x, Term::compound("/", {num(4), num(0)})}));
  Term y = s.fresh_var();
  bool both = s.post({RelOp::Eq, x, Term::compound("/", {num(4), y})}) && s.unify(y, num(0));
  CHECK_FALSE(both);
}

TEST_CASE("for_each_value visits the domain in labeling order") {
  Store s;
  Term x = s.fresh_var();
  REQUIRE(s.post({RelOp::Ge, x, num(-1)}));
  REQUIRE(s.post({RelOp::Le, x, num(2)}));
  std::vector<std::int64_t> seen;
  s.for_each_value(x, [&] { seen.push_back(s.resolve(x).int_value()); });
  CHECK(seen == std::vector<std::int64_t>{0, 1, -1, 2});
  CHECK_FALSE(s.is_bound(x.var_id()));
}

namespace {

struct Gen {
  std::mt19937 rng;
  explicit Gen(unsigned seed) : rng(seed) {}
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  std::int64_t small() { return std::uniform_int_distribution<std::int64_t>(-4, 4)(rng); }

  Term expr(const std::vector<Term>& vars, int depth) {
    if (depth == 0 || pick(3) == 0) {
      if (pick(2) == 0) return vars[pick(static_cast<int>(vars.size()))];
      return num(small());
    }
    static const char* ops[] = {"+", "-", "*", "/", "mod"};
    return Term::compound(ops[pick(5)], {expr(vars, depth - 1), expr(vars, depth - 1)});
  }

  ArithConstraint constraint(const std::vector<Term>& vars) {
    return {static_cast<RelOp>(pick(6)), expr(vars, 2), expr(vars, 2)};
  }
};

// Independent evaluator over an explicit assignment.
std::optional<std::int64_t> eval_with(const Term& t, const std::vector<std::int64_t>& val) {
  if (t.is_int()) return t.int_value();
  if (t.is_var()) return val[t.var_id()];
  auto a = eval_with(t.arg(0), val), b = eval_with(t.arg(1), val);
  if (!a || !b) return std::nullopt;
  const auto& f = t.name();
  if (f == "+") return *a + *b;
  if (f == "-") return *a - *b;
  if (f == "*") return *a * *b;
  if (*b == 0) return std::nullopt;
  if (f == "/") return *a / *b;
  return *a % *b;
}

bool sat(const ArithConstraint& c, const std::vector<std::int64_t>& val) {
  auto a = eval_with(c.lhs, val), b = eval_with(c.rhs, val);
  if (!a || !b) return false;
  switch (c.op) {
    case RelOp::Gt: return *a > *b;
    case RelOp::Lt: return *a < *b;
    case RelOp::Ge: return *a >= *b;
    case RelOp::Le: return *a <= *b;
    case RelOp::Eq: return *a == *b;
    case RelOp::Ne: return *a != *b;
  }
  return false;
}

}  // namespace

TEST_CASE("label agrees with exhaustive enumeration") {
  Gen g(12345);
  const Bounds b{-5, 5};
  std::vector<std::int64_t> order;
  for (std::int64_t a = 0; a <= 5; ++a) {
    order.push_back(a);
    if (a) order.push_back(-a);
  }
  for (int iter = 0; iter < 600; ++iter) {
    Store s(b);
    int n = 1 + g.pick(3);
    std::vector<Term> vars;
    for (int i = 0; i < n; ++i) vars.push_back(s.fresh_var());
    std::vector<ArithConstraint> cs;
    int m = 1 + g.pick(3);
    for (int i = 0; i < m; ++i) cs.push_back(g.constraint(vars));

    // Oracle: first assignment in nested labeling order satisfying all.
    std::optional<std::vector<std::int64_t>> expected;
    std::vector<std::size_t> idx(n, 0);
    while (!expected) {
      std::vector<std::int64_t> val(n);
      for (int i = 0; i < n; ++i) val[i] = order[idx[i]];
      bool ok = true;
      for (const auto& c : cs) ok = ok && sat(c, val);
      if (ok) expected = val;
      int k = n - 1;
      while (k >= 0 && ++idx[k] == order.size()) idx[k--] = 0;
      if (k < 0) break;
    }

    bool posted = true;
    for (const auto& c : cs) posted = posted && s.post(c);
    bool labeled = posted && s.label(vars);
    INFO("iteration " << iter);
    REQUIRE(labeled == expected.has_value());
    if (labeled)
      for (int i = 0; i < n; ++i) CHECK(s.resolve(vars[i]).int_value() == (*expected)[i]);
  }
}

TEST_CASE("undo restores the exact store state") {
  Gen g(777);
  for (int iter = 0; iter < 300; ++iter) {
    Store s;
    std::vector<Term> vars;
    for (int i = 0; i < 4; ++i) vars.push_back(s.fresh_var());
    for (int i = 0; i < 2; ++i) (void)s.post(g.constraint(vars));
    auto before = s.fingerprint();
    auto m = s.mark();
    for (int step = 0; step < 6; ++step) {
      switch (g.pick(4)) {
        case 0: vars.push_back(s.fresh_var()); break;
        case 1: (void)s.post(g.constraint(vars)); break;
        case 2: (void)s.unify(vars[g.pick(static_cast<int>(vars.size()))], g.expr(vars, 1)); break;
        case 3: s.set_ref_counter(s.ref_counter() + 1); break;
      }
      auto inner = s.fingerprint();
      auto m2 = s.mark();
      (void)s.label(vars);
      s.undo(m2);
      CHECK(s.fingerprint() == inner);
    }
    s.undo(m);
    CHECK(s.fingerprint() == before);
  }
}
