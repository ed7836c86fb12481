#include "moo_internal.hpp"

namespace tcg::moo {

Nullness NullFacts::of(int slot) const {
  if (slot == 0) return Nullness::NonNull;
  auto it = slots.find(slot);
  return it == slots.end() ? Nullness::Unknown : it->second;
}

Nullness NullFacts::of_path(int slot, const std::string& f) const {
  auto it = paths.find({slot, f});
  return it == paths.end() ? Nullness::Unknown : it->second;
}

NullFacts join(const NullFacts& a, const NullFacts& b) {
  if (a.bottom) return b;
  if (b.bottom) return a;
  NullFacts r;
  r.bottom = false;
  for (const auto& [k, v] : a.slots)
    if (auto it = b.slots.find(k); it != b.slots.end() && it->second == v) r.slots[k] = v;
  for (const auto& [k, v] : a.paths)
    if (auto it = b.paths.find(k); it != b.paths.end() && it->second == v) r.paths[k] = v;
  for (const auto& [k, v] : a.equal)
    if (auto it = b.equal.find(k); it != b.equal.end() && it->second == v) r.equal[k] = v;
  return r;
}

namespace {

using Path = std::pair<int, std::string>;

void set_path(NullFacts& s, const Path& p, Nullness n) {
  if (n == Nullness::Unknown) {
    s.paths.erase(p);
    return;
  }
  s.paths[p] = n;
  for (const auto& [slot, q] : s.equal)
    if (q == p) s.slots[slot] = n;
}

void set_slot(NullFacts& s, int slot, Nullness n) {
  if (slot == 0) return;
  if (n == Nullness::Unknown) {
    s.slots.erase(slot);
    return;
  }
  s.slots[slot] = n;
  if (auto it = s.equal.find(slot); it != s.equal.end()) set_path(s, it->second, n);
}

void kill_slot(NullFacts& s, int slot) {
  s.slots.erase(slot);
  s.equal.erase(slot);
  for (auto it = s.paths.begin(); it != s.paths.end();) it = it->first.first == slot ? s.paths.erase(it) : std::next(it);
  for (auto it = s.equal.begin(); it != s.equal.end();)
    it = it->second.first == slot ? s.equal.erase(it) : std::next(it);
}

void kill_field(NullFacts& s, const std::string& f) {
  for (auto it = s.paths.begin(); it != s.paths.end();) it = it->first.second == f ? s.paths.erase(it) : std::next(it);
  for (auto it = s.equal.begin(); it != s.equal.end();) it = it->second.second == f ? s.equal.erase(it) : std::next(it);
}

void kill_heap(NullFacts& s) {
  s.paths.clear();
  s.equal.clear();
}

// Slot or one-level path an expression denotes, if trackable.
std::optional<int> slot_of(const Expr& e) {
  if (e.kind == Expr::Kind::This) return 0;
  if (e.kind == Expr::Kind::Name && e.slot >= 0) return e.slot;
  return std::nullopt;
}

std::optional<Path> path_of(const Expr& e) {
  if (e.kind != Expr::Kind::Field) return std::nullopt;
  if (auto r = slot_of(*e.kids[0])) return Path{*r, e.name};
  return std::nullopt;
}

void refine(NullFacts& s, const Expr& e, Nullness n) {
  if (s.bottom) return;
  if (auto sl = slot_of(e)) {
    if (*sl == 0 && n == Nullness::Null) s = NullFacts{};
    else set_slot(s, *sl, n);
  } else if (auto p = path_of(e)) {
    set_path(s, *p, n);
  }
}

}  // namespace

NullnessAnalysis::NullnessAnalysis(const MethodDecl& m) : m_(m) {
  if (!m.body) return;
  NullFacts in;
  in.bottom = false;
  stmt(*m.body, in);
}

const NullFacts& NullnessAnalysis::before(const Stmt* s) const {
  auto it = before_.find(s);
  return it == before_.end() ? empty_ : it->second;
}

const NullFacts& NullnessAnalysis::header(const Stmt* w) const {
  auto it = header_.find(w);
  return it == header_.end() ? empty_ : it->second;
}

Nullness NullnessAnalysis::value(const Expr& e, const NullFacts& in) const {
  switch (e.kind) {
    case Expr::Kind::Null: return Nullness::Null;
    case Expr::Kind::New:
    case Expr::Kind::NewArray:
    case Expr::Kind::This: return Nullness::NonNull;
    case Expr::Kind::Name: return e.slot >= 0 ? in.of(e.slot) : Nullness::Unknown;
    case Expr::Kind::Field:
      if (auto p = path_of(e)) return in.of_path(p->first, p->second);
      return Nullness::Unknown;
    default: return Nullness::Unknown;
  }
}

NullFacts NullnessAnalysis::expr(const Expr& e, NullFacts s) {
  if (s.bottom) return s;
  switch (e.kind) {
    case Expr::Kind::Field:
    case Expr::Kind::Length:
      s = expr(*e.kids[0], s);
      refine(s, *e.kids[0], Nullness::NonNull);
      return s;
    case Expr::Kind::Index:
      s = expr(*e.kids[0], s);
      refine(s, *e.kids[0], Nullness::NonNull);
      return expr(*e.kids[1], s);
    case Expr::Kind::Call:
      s = expr(*e.kids[0], s);
      refine(s, *e.kids[0], Nullness::NonNull);
      for (std::size_t i = 1; i < e.kids.size(); ++i) s = expr(*e.kids[i], s);
      kill_heap(s);
      return s;
    default:
      for (const auto& k : e.kids)
        if (k) s = expr(*k, s);
      return s;
  }
}

void NullnessAnalysis::assign_slot(NullFacts& s, int slot, const Expr& rhs, const NullFacts& before_rhs) {
  (void)before_rhs;
  Nullness n = value(rhs, s);
  std::optional<Path> eq;
  if (auto p = path_of(rhs)) eq = p;
  if (auto src = slot_of(rhs); src && *src != slot) {
    if (auto it = s.equal.find(*src); it != s.equal.end()) eq = it->second;
  }
  kill_slot(s, slot);
  if (eq && eq->first == slot) eq.reset();
  if (eq) s.equal[slot] = *eq;
  set_slot(s, slot, n);
}

void NullnessAnalysis::cond(const Expr& c, const NullFacts& in, NullFacts& t, NullFacts& f) {
  if (in.bottom) {
    t = f = in;
    return;
  }
  if (c.kind == Expr::Kind::Binary && (c.op == "&&" || c.op == "||")) {
    NullFacts ta, fa, tb, fb;
    cond(*c.kids[0], in, ta, fa);
    if (c.op == "&&") {
      cond(*c.kids[1], ta, tb, fb);
      t = tb;
      f = join(fa, fb);
    } else {
      cond(*c.kids[1], fa, tb, fb);
      t = join(ta, tb);
      f = fb;
    }
    return;
  }
  if (c.kind == Expr::Kind::Unary && c.op == "!") {
    cond(*c.kids[0], in, f, t);
    return;
  }
  NullFacts s = expr(c, in);
  t = f = s;
  if (c.kind == Expr::Kind::Binary && (c.op == "==" || c.op == "!=")) {
    const Expr* other = nullptr;
    if (c.kids[1]->kind == Expr::Kind::Null) other = c.kids[0].get();
    if (c.kids[0]->kind == Expr::Kind::Null) other = c.kids[1].get();
    if (other) {
      NullFacts& is_null = c.op == "==" ? t : f;
      NullFacts& not_null = c.op == "==" ? f : t;
      refine(is_null, *other, Nullness::Null);
      refine(not_null, *other, Nullness::NonNull);
    }
  }
}

NullFacts NullnessAnalysis::seq(const std::vector<StmtPtr>& body, NullFacts s) {
  for (const auto& st : body) s = stmt(*st, s);
  return s;
}

NullFacts NullnessAnalysis::stmt(const Stmt& st, NullFacts s) {
  before_[&st] = s;
  if (s.bottom) {
    // Still visit nested statements so every statement has an entry.
    if (st.kind == Stmt::Kind::Block) seq(st.body, s);
    if (st.kind == Stmt::Kind::If) {
      stmt(*st.then_s, s);
      if (st.else_s) stmt(*st.else_s, s);
    }
    if (st.kind == Stmt::Kind::While) {
      header_[&st] = s;
      stmt(*st.loop_body, s);
    }
    return s;
  }
  switch (st.kind) {
    case Stmt::Kind::Block: return seq(st.body, s);
    case Stmt::Kind::Decl: {
      if (!is_ref_type(st.type)) {
        if (st.expr) s = expr(*st.expr, s);
        return s;
      }
      if (st.expr) {
        NullFacts pre = s;
        s = expr(*st.expr, s);
        assign_slot(s, st.slot, *st.expr, pre);
      } else {
        kill_slot(s, st.slot);
        set_slot(s, st.slot, Nullness::Null);
      }
      return s;
    }
    case Stmt::Kind::Assign: {
      const Expr& lhs = *st.lhs;
      if (lhs.kind == Expr::Kind::Name) {
        NullFacts pre = s;
        s = expr(*st.expr, s);
        if (is_ref_type(lhs.type)) assign_slot(s, lhs.slot, *st.expr, pre);
        return s;
      }
      if (lhs.kind == Expr::Kind::Field) {
        s = expr(*lhs.kids[0], s);
        refine(s, *lhs.kids[0], Nullness::NonNull);
        s = expr(*st.expr, s);
        if (!is_ref_type(lhs.type)) return s;
        Nullness n = value(*st.expr, s);
        auto root = slot_of(*lhs.kids[0]);
        std::optional<int> src = slot_of(*st.expr);
        kill_field(s, lhs.name);
        if (root) {
          set_path(s, {*root, lhs.name}, n);
          if (src && *src != 0 && *src != *root) s.equal[*src] = {*root, lhs.name};
        }
        return s;
      }
      // array element
      s = expr(*lhs.kids[0], s);
      refine(s, *lhs.kids[0], Nullness::NonNull);
      s = expr(*lhs.kids[1], s);
      return expr(*st.expr, s);
    }
    case Stmt::Kind::If: {
      NullFacts t, f;
      cond(*st.expr, s, t, f);
      NullFacts a = stmt(*st.then_s, t);
      NullFacts b = st.else_s ? stmt(*st.else_s, f) : f;
      return join(a, b);
    }
    case Stmt::Kind::While: {
      NullFacts h = s;
      for (;;) {
        NullFacts t, f;
        cond(*st.expr, h, t, f);
        NullFacts out = stmt(*st.loop_body, t);
        NullFacts nh = join(s, out);
        if (nh == h) {
          header_[&st] = h;
          return f;
        }
        h = nh;
      }
    }
    case Stmt::Kind::Return:
      if (st.expr) expr(*st.expr, s);
      return NullFacts{};
    case Stmt::Kind::Expr: return expr(*st.expr, s);
  }
  return s;
}

}  // namespace tcg::moo
