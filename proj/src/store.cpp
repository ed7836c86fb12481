#include "tcg/store.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tcg {

std::string_view relop_symbol(RelOp op) {
  switch (op) {
    case RelOp::Gt: return "#>";
    case RelOp::Lt: return "#<";
    case RelOp::Ge: return "#>=";
    case RelOp::Le: return "#=<";
    case RelOp::Eq: return "#=";
    case RelOp::Ne: return "#\\=";
  }
  return "?";
}

std::optional<RelOp> relop_from_symbol(std::string_view s) {
  if (s == "#>") return RelOp::Gt;
  if (s == "#<") return RelOp::Lt;
  if (s == "#>=") return RelOp::Ge;
  if (s == "#=<") return RelOp::Le;
  if (s == "#=") return RelOp::Eq;
  if (s == "#\\=") return RelOp::Ne;
  return std::nullopt;
}

RelOp negate(RelOp op) {
  switch (op) {
    case RelOp::Gt: return RelOp::Le;
    case RelOp::Le: return RelOp::Gt;
    case RelOp::Lt: return RelOp::Ge;
    case RelOp::Ge: return RelOp::Lt;
    case RelOp::Eq: return RelOp::Ne;
    case RelOp::Ne: return RelOp::Eq;
  }
  return op;
}

std::optional<std::int64_t> int_div(std::int64_t a, std::int64_t b) {
  if (b == 0) return std::nullopt;
  return a / b;
}

std::optional<std::int64_t> int_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) return std::nullopt;
  return a % b;
}

namespace {

bool holds(RelOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case RelOp::Gt: return a > b;
    case RelOp::Lt: return a < b;
    case RelOp::Ge: return a >= b;
    case RelOp::Le: return a <= b;
    case RelOp::Eq: return a == b;
    case RelOp::Ne: return a != b;
  }
  return false;
}

// 0, 1, -1, 2, -2, ... restricted to d.
std::vector<std::int64_t> value_order(Interval d) {
  std::vector<std::int64_t> out;
  if (d.empty()) return out;
  std::int64_t m = std::max(d.lo < 0 ? -d.lo : d.lo, d.hi < 0 ? -d.hi : d.hi);
  for (std::int64_t a = 0; a <= m; ++a) {
    if (d.contains(a)) out.push_back(a);
    if (a != 0 && d.contains(-a)) out.push_back(-a);
  }
  return out;
}

}  // namespace

Store::Store(Bounds bounds) : bounds_(bounds) {
  if (bounds.lo > bounds.hi) throw std::invalid_argument("empty bounds");
}

Term Store::fresh_var() {
  VarId id = next_var_id();
  bindings_.emplace_back();
  domains_.push_back({bounds_.lo, bounds_.hi});
  constrained_.push_back(0);
  return Term::var(id);
}

VarId Store::fresh_block(std::size_t n) {
  VarId first = next_var_id();
  bindings_.resize(bindings_.size() + n);
  domains_.resize(domains_.size() + n, Interval{bounds_.lo, bounds_.hi});
  constrained_.resize(constrained_.size() + n, 0);
  return first;
}

Term Store::deref(const Term& t) const {
  Term cur = t;
  while (cur.is_var()) {
    auto id = cur.var_id();
    if (id < 0 || static_cast<std::size_t>(id) >= bindings_.size() || !bindings_[id]) break;
    cur = *bindings_[id];
  }
  return cur;
}

Term Store::resolve(const Term& t) const {
  Term d = deref(t);
  switch (d.kind()) {
    case TermKind::Var:
    case TermKind::Int:
    case TermKind::Null:
    case TermKind::Nil:
    case TermKind::Atom:
      return d;
    case TermKind::Ref:
      return Term::ref(resolve(d.arg(0)));
    case TermKind::Cons:
      return Term::cons(resolve(d.arg(0)), resolve(d.arg(1)));
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(d.arity());
      for (const auto& a : d.args()) args.push_back(resolve(a));
      return Term::compound(d.name(), std::move(args));
    }
  }
  return d;
}

bool Store::is_bound(VarId v) const {
  return v >= 0 && static_cast<std::size_t>(v) < bindings_.size() && bindings_[v].has_value();
}

bool Store::is_constrained(VarId v) const {
  return v >= 0 && static_cast<std::size_t>(v) < constrained_.size() && constrained_[v];
}

std::optional<Interval> Store::domain(VarId v) const {
  if (!is_constrained(v) || is_bound(v)) return std::nullopt;
  return domains_[v];
}

void Store::bind(VarId v, const Term& value) {
  trail_.push_back({TrailEntry::Kind::Bind, v, {}, false, 0});
  bindings_[v] = value;
}

void Store::set_domain(VarId v, Interval d) {
  trail_.push_back({TrailEntry::Kind::Domain, v, domains_[v], constrained_[v] != 0, 0});
  domains_[v] = d;
  constrained_[v] = 1;
}

void Store::make_constrained(VarId v) {
  if (constrained_[v]) return;
  set_domain(v, {bounds_.lo, bounds_.hi});
}

void Store::set_ref_counter(std::int64_t v) {
  trail_.push_back({TrailEntry::Kind::Counter, 0, {}, false, ref_counter_});
  ref_counter_ = v;
}

Store::Mark Store::mark() const { return {trail_.size(), constraints_.size(), bindings_.size()}; }

void Store::undo(const Mark& m) {
  while (trail_.size() > m.trail) {
    const auto& e = trail_.back();
    switch (e.kind) {
      case TrailEntry::Kind::Bind:
        bindings_[e.var].reset();
        break;
      case TrailEntry::Kind::Domain:
        domains_[e.var] = e.old_domain;
        constrained_[e.var] = e.old_constrained ? 1 : 0;
        break;
      case TrailEntry::Kind::Counter:
        ref_counter_ = e.old_counter;
        break;
    }
    trail_.pop_back();
  }
  constraints_.resize(std::min(constraints_.size(), m.constraints));
  if (bindings_.size() > m.vars) {
    bindings_.resize(m.vars);
    domains_.resize(m.vars);
    constrained_.resize(m.vars);
  }
}

bool Store::occurs(VarId v, const Term& t) const {
  Term d = deref(t);
  if (d.is_var()) return d.var_id() == v;
  for (const auto& a : d.args())
    if (occurs(v, a)) return true;
  return false;
}

bool Store::unify_rec(const Term& a0, const Term& b0, bool& touched_fd) {
  Term a = deref(a0);
  Term b = deref(b0);
  if (a.is_var() && b.is_var() && a.var_id() == b.var_id()) return true;
  if (!a.is_var() && b.is_var()) std::swap(a, b);
  if (a.is_var()) {
    VarId v = a.var_id();
    if (b.is_var()) {
      VarId w = b.var_id();
      bool cv = constrained_[v] != 0, cw = constrained_[w] != 0;
      if (cv && !cw) {
        bind(w, a);
      } else if (cv && cw) {
        Interval d{std::max(domains_[v].lo, domains_[w].lo), std::min(domains_[v].hi, domains_[w].hi)};
        if (d.empty()) return false;
        if (d != domains_[w]) set_domain(w, d);
        bind(v, b);
        touched_fd = true;
      } else {
        bind(v, b);
      }
      return true;
    }
    if (constrained_[v]) {
      if (!b.is_int() || !domains_[v].contains(b.int_value())) return false;
      bind(v, b);
      touched_fd = true;
      return true;
    }
    if (occurs(v, b)) return false;
    bind(v, b);
    return true;
  }
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Int:
      return a.int_value() == b.int_value();
    case TermKind::Null:
    case TermKind::Nil:
      return true;
    case TermKind::Atom:
      return a.name() == b.name();
    case TermKind::Compound:
      if (a.name() != b.name() || a.arity() != b.arity()) return false;
      [[fallthrough]];
    case TermKind::Ref:
    case TermKind::Cons:
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (!unify_rec(a.arg(i), b.arg(i), touched_fd)) return false;
      return true;
    case TermKind::Var:
      break;
  }
  return false;
}

bool Store::unify(const Term& a, const Term& b) {
  Mark m = mark();
  bool touched = false;
  bool ok = unify_rec(a, b, touched);
  if (ok && touched) ok = propagate();
  if (!ok) undo(m);
  return ok;
}

bool Store::syntactic_eq(const Term& a0, const Term& b0) const {
  Term a = deref(a0);
  Term b = deref(b0);
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Var:
      return a.var_id() == b.var_id();
    case TermKind::Int:
      return a.int_value() == b.int_value();
    case TermKind::Null:
    case TermKind::Nil:
      return true;
    case TermKind::Atom:
      return a.name() == b.name();
    case TermKind::Compound:
      if (a.name() != b.name() || a.arity() != b.arity()) return false;
      [[fallthrough]];
    case TermKind::Ref:
    case TermKind::Cons:
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (!syntactic_eq(a.arg(i), b.arg(i))) return false;
      return true;
  }
  return false;
}

namespace {

using Wide = __int128;

Wide floor_div(Wide a, Wide b) {
  Wide q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Wide ceil_div(Wide a, Wide b) {
  Wide q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return q;
}

// sum(coef * var) + k
struct Linear {
  std::map<VarId, Wide> coef;
  Wide k = 0;

  void add(const Linear& o, Wide scale) {
    for (const auto& [v, c] : o.coef) {
      coef[v] += c * scale;
      if (coef[v] == 0) coef.erase(v);
    }
    k += o.k * scale;
  }
};

struct Range {
  Wide lo;
  Wide hi;
};

}  // namespace

std::optional<std::int64_t> Store::eval(const Term& expr) const {
  Term d = deref(expr);
  if (d.is_int()) return d.int_value();
  if (d.kind() != TermKind::Compound) return std::nullopt;
  if (d.is_compound("-", 1)) {
    auto x = eval(d.arg(0));
    if (!x) return std::nullopt;
    return -*x;
  }
  if (d.arity() != 2) return std::nullopt;
  auto x = eval(d.arg(0));
  auto y = eval(d.arg(1));
  if (!x || !y) return std::nullopt;
  const auto& f = d.name();
  if (f == "+") return *x + *y;
  if (f == "-") return *x - *y;
  if (f == "*") return *x * *y;
  if (f == "/") return int_div(*x, *y);
  if (f == "mod") return int_mod(*x, *y);
  return std::nullopt;
}

namespace {

bool is_ground(const Store& s, const Term& t) {
  Term d = s.deref(t);
  if (d.is_var()) return false;
  for (const auto& a : d.args())
    if (!is_ground(s, a)) return false;
  return true;
}

// nullopt: not linear (or not arithmetic). `bad` is set for terms that
// can never be integers, which makes the constraint unsatisfiable.
std::optional<Linear> linearize(const Store& s, const Term& t, bool& bad) {
  Term d = s.deref(t);
  Linear out;
  if (d.is_int()) {
    out.k = d.int_value();
    return out;
  }
  if (d.is_var()) {
    out.coef[d.var_id()] = 1;
    return out;
  }
  if (d.kind() != TermKind::Compound) {
    bad = true;
    return std::nullopt;
  }
  if (d.is_compound("-", 1)) {
    auto x = linearize(s, d.arg(0), bad);
    if (!x) return std::nullopt;
    Linear r;
    r.add(*x, -1);
    return r;
  }
  if (d.arity() != 2) {
    bad = true;
    return std::nullopt;
  }
  const auto& f = d.name();
  if (f == "/" || f == "mod") {
    if (!is_ground(s, d)) return std::nullopt;
    auto v = s.eval(d);
    if (!v) {
      bad = true;
      return std::nullopt;
    }
    out.k = *v;
    return out;
  }
  auto x = linearize(s, d.arg(0), bad);
  if (!x) return std::nullopt;
  auto y = linearize(s, d.arg(1), bad);
  if (!y) return std::nullopt;
  if (f == "+") {
    out.add(*x, 1);
    out.add(*y, 1);
    return out;
  }
  if (f == "-") {
    out.add(*x, 1);
    out.add(*y, -1);
    return out;
  }
  if (f == "*") {
    if (x->coef.empty()) {
      out.add(*y, x->k);
      return out;
    }
    if (y->coef.empty()) {
      out.add(*x, y->k);
      return out;
    }
    return std::nullopt;
  }
  bad = true;
  return std::nullopt;
}

}  // namespace

bool Store::narrow(VarId v, std::int64_t lo, std::int64_t hi, bool& changed) {
  Interval cur = domains_[v];
  Interval next{std::max(cur.lo, lo), std::min(cur.hi, hi)};
  if (next.empty()) return false;
  if (next == cur) return true;
  changed = true;
  set_domain(v, next);
  if (next.lo == next.hi) bind(v, Term::integer(next.lo));
  return true;
}

namespace {

std::int64_t clamp64(Wide v) {
  constexpr Wide lo = INT64_MIN, hi = INT64_MAX;
  return static_cast<std::int64_t>(v < lo ? lo : (v > hi ? hi : v));
}

}  // namespace

bool Store::revise(const ArithConstraint& c, bool& changed) {
  bool bad = false;
  auto l = linearize(*this, c.lhs, bad);
  std::optional<Linear> r;
  if (l) r = linearize(*this, c.rhs, bad);
  if (bad) return false;
  if (l && r) {
    Linear e = *l;  // e = lhs - rhs
    e.add(*r, -1);
    auto range_of = [&](VarId v) { return domains_[v]; };
    if (e.coef.empty()) return holds(c.op, clamp64(e.k), 0);
    if (c.op == RelOp::Ne) {
      if (e.coef.size() != 1) return true;
      auto [v, cv] = *e.coef.begin();
      if ((-e.k) % cv != 0) return true;
      Wide val = -e.k / cv;
      Interval d = range_of(v);
      if (val == d.lo) return narrow(v, d.lo + 1, d.hi, changed);
      if (val == d.hi) return narrow(v, d.lo, d.hi - 1, changed);
      return true;
    }
    // Each case reduces to one or two forms  sign*e + off <= 0.
    std::vector<std::pair<Wide, Wide>> forms;
    switch (c.op) {
      case RelOp::Le: forms = {{1, 0}}; break;
      case RelOp::Lt: forms = {{1, 1}}; break;
      case RelOp::Ge: forms = {{-1, 0}}; break;
      case RelOp::Gt: forms = {{-1, 1}}; break;
      case RelOp::Eq: forms = {{1, 0}, {-1, 0}}; break;
      case RelOp::Ne: break;
    }
    for (auto [sign, off] : forms) {
      // sum(sign*c_i*x_i) + sign*k + off <= 0
      Wide min_total = sign * e.k + off;
      for (const auto& [v, cv] : e.coef) {
        Wide a = sign * cv;
        Interval d = range_of(v);
        min_total += a > 0 ? a * d.lo : a * d.hi;
      }
      if (min_total > 0) return false;
      for (const auto& [v, cv] : e.coef) {
        Wide a = sign * cv;
        Interval d = range_of(v);
        if (is_bound(v)) continue;
        Wide own_min = a > 0 ? a * d.lo : a * d.hi;
        Wide rest = min_total - own_min;
        // a*x <= -rest
        if (a > 0) {
          Wide ub = floor_div(-rest, a);
          if (ub < d.hi && !narrow(v, d.lo, clamp64(ub), changed)) return false;
        } else {
          Wide lb = ceil_div(-rest, a);
          if (lb > d.lo && !narrow(v, clamp64(lb), d.hi, changed)) return false;
        }
      }
    }
    return true;
  }
  // Nonlinear: exact when ground, otherwise interval reasoning.
  if (is_ground(*this, c.lhs) && is_ground(*this, c.rhs)) {
    auto x = eval(c.lhs);
    auto y = eval(c.rhs);
    return x && y && holds(c.op, *x, *y);
  }
  std::function<std::optional<Range>(const Term&)> range = [&](const Term& t) -> std::optional<Range> {
    Term d = deref(t);
    if (d.is_int()) return Range{d.int_value(), d.int_value()};
    if (d.is_var()) {
      auto v = d.var_id();
      if (!constrained_[v]) return Range{bounds_.lo, bounds_.hi};
      return Range{domains_[v].lo, domains_[v].hi};
    }
    if (d.is_compound("-", 1)) {
      auto x = range(d.arg(0));
      if (!x) return std::nullopt;
      return Range{-x->hi, -x->lo};
    }
    if (d.kind() != TermKind::Compound || d.arity() != 2) return std::nullopt;
    auto x = range(d.arg(0));
    auto y = range(d.arg(1));
    if (!x || !y) return std::nullopt;
    const auto& f = d.name();
    if (f == "+") return Range{x->lo + y->lo, x->hi + y->hi};
    if (f == "-") return Range{x->lo - y->hi, x->hi - y->lo};
    if (f == "*") {
      Wide p[4] = {x->lo * y->lo, x->lo * y->hi, x->hi * y->lo, x->hi * y->hi};
      return Range{*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
    }
    if (y->lo == 0 && y->hi == 0) return std::nullopt;
    Wide xm = std::max(x->lo < 0 ? -x->lo : x->lo, x->hi < 0 ? -x->hi : x->hi);
    Wide ym = std::max(y->lo < 0 ? -y->lo : y->lo, y->hi < 0 ? -y->hi : y->hi);
    if (f == "/") {
      if (y->lo > 0 || y->hi < 0) {
        Wide p[4] = {x->lo / y->lo, x->lo / y->hi, x->hi / y->lo, x->hi / y->hi};
        return Range{*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
      }
      return Range{-xm, xm};
    }
    if (f == "mod") {
      Wide m = std::min(xm, ym - 1);
      if (x->lo >= 0) return Range{0, m};
      if (x->hi <= 0) return Range{-m, 0};
      return Range{-m, m};
    }
    return std::nullopt;
  };
  auto x = range(c.lhs);
  auto y = range(c.rhs);
  if (!x || !y) return false;
  switch (c.op) {
    case RelOp::Le: if (x->lo > y->hi) return false; break;
    case RelOp::Lt: if (x->lo >= y->hi) return false; break;
    case RelOp::Ge: if (x->hi < y->lo) return false; break;
    case RelOp::Gt: if (x->hi <= y->lo) return false; break;
    case RelOp::Eq:
      if (x->lo > y->hi || y->lo > x->hi) return false;
      {
        Term ld = deref(c.lhs), rd = deref(c.rhs);
        if (ld.is_var() && !is_bound(ld.var_id()) && constrained_[ld.var_id()] &&
            !narrow(ld.var_id(), clamp64(y->lo), clamp64(y->hi), changed))
          return false;
        if (rd.is_var() && !is_bound(rd.var_id()) && constrained_[rd.var_id()] &&
            !narrow(rd.var_id(), clamp64(x->lo), clamp64(x->hi), changed))
          return false;
      }
      break;
    case RelOp::Ne:
      if (x->lo == x->hi && y->lo == y->hi && x->lo == y->lo) return false;
      break;
  }
  return true;
}

bool Store::propagate() {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < constraints_.size(); ++i)
      if (!revise(constraints_[i], changed)) return false;
  }
  return true;
}

bool Store::constrain_vars(const Term& expr) {
  Term d = deref(expr);
  if (d.is_var()) {
    make_constrained(d.var_id());
    return true;
  }
  if (d.is_int()) return true;
  if (d.kind() != TermKind::Compound) return false;
  for (const auto& a : d.args())
    if (!constrain_vars(a)) return false;
  return true;
}

bool Store::post(const ArithConstraint& c) {
  Mark m = mark();
  bool lg = is_ground(*this, c.lhs), rg = is_ground(*this, c.rhs);
  if (lg && rg) {
    auto x = eval(c.lhs);
    auto y = eval(c.rhs);
    return x && y && holds(c.op, *x, *y);
  }
  // An equation that fully determines one variable just binds it.
  if (c.op == RelOp::Eq && (lg || rg)) {
    Term v = deref(lg ? c.rhs : c.lhs);
    if (v.is_var()) {
      auto val = eval(lg ? c.lhs : c.rhs);
      if (!val) return false;
      bool ok = bind_value(v, *val);
      if (!ok) undo(m);
      return ok;
    }
  }
  bool ok = constrain_vars(c.lhs) && constrain_vars(c.rhs);
  if (ok) {
    constraints_.push_back(c);
    ok = propagate();
  }
  if (!ok) undo(m);
  return ok;
}

bool Store::bind_value(const Term& v, std::int64_t value) {
  bool touched = false;
  if (!unify_rec(v, Term::integer(value), touched)) return false;
  return !touched || propagate();
}

bool Store::ground_constraints_hold() const {
  for (const auto& c : constraints_) {
    if (!is_ground(*this, c.lhs) || !is_ground(*this, c.rhs)) continue;
    auto x = eval(c.lhs);
    auto y = eval(c.rhs);
    if (!x || !y || !holds(c.op, *x, *y)) return false;
  }
  return true;
}

bool Store::label(std::span<const Term> vars) {
  Mark m = mark();
  std::vector<VarId> todo;
  for (const auto& t : vars) {
    std::vector<VarId> vs;
    collect_vars(resolve(t), vs);
    for (auto v : vs)
      if (std::find(todo.begin(), todo.end(), v) == todo.end()) todo.push_back(v);
  }
  for (auto v : todo) make_constrained(v);
  if (!propagate()) {
    undo(m);
    return false;
  }
  std::function<bool(std::size_t)> dfs = [&](std::size_t i) -> bool {
    while (i < todo.size() && is_bound(todo[i])) ++i;
    if (i == todo.size()) return ground_constraints_hold();
    VarId v = todo[i];
    for (auto val : value_order(domains_[v])) {
      Mark m2 = mark();
      if (bind_value(Term::var(v), val) && dfs(i + 1)) return true;
      undo(m2);
    }
    return false;
  };
  if (dfs(0)) return true;
  undo(m);
  return false;
}

void Store::for_each_value(const Term& t, const std::function<void()>& k) {
  Term d = deref(t);
  if (d.is_int()) {
    k();
    return;
  }
  if (!d.is_var()) return;
  Mark m = mark();
  make_constrained(d.var_id());
  for (auto val : value_order(domains_[d.var_id()])) {
    Mark m2 = mark();
    if (bind_value(d, val)) k();
    undo(m2);
  }
  undo(m);
}

std::uint64_t Store::fingerprint() const {
  std::ostringstream os;
  os << bindings_.size() << ';' << ref_counter_ << ';';
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    if (bindings_[i]) os << i << '=' << *bindings_[i] << ';';
    if (constrained_[i]) os << i << ':' << domains_[i].lo << ".." << domains_[i].hi << ';';
  }
  for (const auto& c : constraints_) os << c.lhs << relop_symbol(c.op) << c.rhs << ';';
  return std::hash<std::string>{}(os.str());
}

}  // namespace tcg
