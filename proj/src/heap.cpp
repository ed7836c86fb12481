#include "tcg/heap.hpp"

#include <algorithm>

namespace tcg {

namespace {

struct Scope {
  Store& s;
  Store::Mark m;
  explicit Scope(Store& st) : s(st), m(st.mark()) {}
  ~Scope() { s.undo(m); }
};

std::pair<std::string, std::string> split_fsig(const Store& s, const Term& fsig) {
  Term f = s.resolve(fsig);
  if (!f.is_compound(":", 2) || !f.arg(0).is_atom() || !f.arg(1).is_atom())
    throw std::invalid_argument("malformed field signature " + to_string(f));
  return {f.arg(0).name(), f.arg(1).name()};
}

// Binds an unbound field list to the declared fields of the (now known) type.
bool ensure_fields(HeapContext& ctx, const Term& type, const Term& fields) {
  Store& s = ctx.store;
  Term f = s.deref(fields);
  if (!f.is_var()) return true;
  Term t = s.deref(type);
  if (!t.is_atom()) return false;
  std::vector<Term> items;
  for (const auto& fd : ctx.classes.all_fields(t.name()))
    items.push_back(Term::compound("field", {Term::atom(fd.name), s.fresh_var()}));
  return s.unify(f, Term::list(items));
}

std::optional<Term> field_value(const Store& s, const Term& fields, const std::string& name) {
  Term cur = s.deref(fields);
  while (cur.kind() == TermKind::Cons) {
    Term f = s.deref(cur.arg(0));
    if (f.is_compound("field", 2) && s.deref(f.arg(0)).is_atom(name)) return f.arg(1);
    cur = s.deref(cur.arg(1));
  }
  return std::nullopt;
}

std::optional<Term> replace_field(const Store& s, const Term& fields, const std::string& name, const Term& v) {
  std::vector<Term> items;
  bool found = false;
  Term cur = s.deref(fields);
  while (cur.kind() == TermKind::Cons) {
    Term f = s.deref(cur.arg(0));
    if (!found && f.is_compound("field", 2) && s.deref(f.arg(0)).is_atom(name)) {
      items.push_back(Term::compound("field", {f.arg(0), v}));
      found = true;
    } else {
      items.push_back(f);
    }
    cur = s.deref(cur.arg(1));
  }
  if (!found || cur.kind() != TermKind::Nil) return std::nullopt;
  return Term::list(items);
}

std::int64_t new_ref(HeapContext& ctx, const Term& heap) {
  Store& s = ctx.store;
  std::vector<std::int64_t> used;
  Term cur = s.deref(heap);
  while (cur.kind() == TermKind::Cons) {
    Term key = s.deref(s.deref(cur.arg(0)).arg(0));
    if (key.is_int()) used.push_back(key.int_value());
    cur = s.deref(cur.arg(1));
  }
  std::int64_t r = s.ref_counter();
  while (std::find(used.begin(), used.end(), r) != used.end()) ++r;
  s.set_ref_counter(r + 1);
  return r;
}

Term array_cell(const Term& t, const Term& len, const Term& elems) {
  return Term::compound("array", {t, len, elems});
}

// Runs k with the cell's element list materialized as a proper list.
void with_elems(HeapContext& ctx, const Term& len, const Term& elems, const Cont& k) {
  Store& s = ctx.store;
  if (!s.deref(elems).is_var()) {
    k();
    return;
  }
  s.for_each_value(len, [&] {
    std::int64_t n = s.deref(len).int_value();
    if (n < 0) return;
    Scope sc(s);
    std::vector<Term> items;
    for (std::int64_t i = 0; i < n; ++i) items.push_back(s.fresh_var());
    if (s.unify(elems, Term::list(items))) k();
  });
}

// Runs k(i) for every admissible concrete index, posting idx #= i.
void for_each_index(HeapContext& ctx, const Term& idx, std::size_t n, const std::function<void(std::size_t)>& k) {
  Store& s = ctx.store;
  Term i = s.deref(idx);
  if (i.is_int()) {
    if (i.int_value() >= 0 && static_cast<std::size_t>(i.int_value()) < n) k(static_cast<std::size_t>(i.int_value()));
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    Scope sc(s);
    if (s.post({RelOp::Eq, i, Term::integer(static_cast<std::int64_t>(j))})) k(j);
  }
}

// Fetches an array cell and runs k(T, Len, items).
void with_array(HeapContext& ctx, const Term& h, const Term& ref,
                const std::function<void(const Term&, const Term&, const std::vector<Term>&)>& k) {
  Store& s = ctx.store;
  get_cell(ctx, h, ref, [&](const Term& cell) {
    Scope sc(s);
    Term t = s.fresh_var(), len = s.fresh_var(), elems = s.fresh_var();
    if (!s.unify(cell, array_cell(t, len, elems))) return;
    if (!s.post({RelOp::Ge, len, Term::integer(0)})) return;
    with_elems(ctx, len, elems, [&] {
      std::vector<Term> items;
      if (!list_items(s.resolve(elems), items)) return;
      k(t, len, items);
    });
  });
}

}  // namespace

Term make_loc(const Term& key, const Term& cell) { return Term::compound(",", {key, cell}); }

Term make_object(const std::string& cls, const std::vector<std::pair<std::string, Term>>& fields) {
  std::vector<Term> items;
  for (const auto& [n, v] : fields) items.push_back(Term::compound("field", {Term::atom(n), v}));
  return Term::compound("object", {Term::atom(cls), Term::list(items)});
}

Term zero_value(const Term& type) {
  if (type.is_atom("int") || type.is_atom("bool")) return Term::integer(0);
  return Term::null();
}

void get_cell(HeapContext& ctx, const Term& heap, const Term& key, const std::function<void(const Term&)>& k) {
  Store& s = ctx.store;
  const bool ground = ctx.mode == ExecMode::Ground;
  Term kd = s.deref(key);
  if (!kd.is_var() && !kd.is_int()) {
    if (ground) throw DanglingReference("dangling reference " + to_string(s.resolve(key)));
    return;
  }
  std::vector<Term> candidates;
  Term cur = s.deref(heap);
  while (cur.kind() == TermKind::Cons) {
    Term loc = s.deref(cur.arg(0));
    if (s.syntactic_eq(loc.arg(0), kd)) {
      k(loc.arg(1));
      return;
    }
    if (kd.is_var() && s.deref(loc.arg(0)).is_var()) candidates.push_back(loc);
    cur = s.deref(cur.arg(1));
  }
  if (ground) throw DanglingReference("dangling reference " + to_string(s.resolve(key)));
  if (ctx.alias == AliasMode::On && kd.is_var()) {
    for (const auto& loc : candidates) {
      Scope sc(s);
      if (s.unify(kd, loc.arg(0))) k(loc.arg(1));
    }
  }
  if (cur.is_var()) {
    Scope sc(s);
    Term cell = s.fresh_var();
    if (s.unify(cur, Term::cons(make_loc(kd, cell), s.fresh_var()))) k(cell);
  }
}

Term set_cell(HeapContext& ctx, const Term& heap, const Term& key, const Term& cell) {
  Store& s = ctx.store;
  std::vector<Term> prefix;
  Term cur = s.deref(heap);
  while (cur.kind() == TermKind::Cons) {
    Term loc = s.deref(cur.arg(0));
    if (s.syntactic_eq(loc.arg(0), key)) {
      prefix.push_back(make_loc(loc.arg(0), cell));
      return Term::list(prefix, cur.arg(1));
    }
    prefix.push_back(loc);
    cur = s.deref(cur.arg(1));
  }
  throw std::logic_error("set_cell on absent reference " + to_string(s.resolve(key)));
}

void subclass(HeapContext& ctx, const Term& t, const std::string& c, const Cont& k) {
  Store& s = ctx.store;
  Term td = s.deref(t);
  if (td.is_atom()) {
    if (ctx.classes.is_subclass(td.name(), c)) k();
    return;
  }
  if (!td.is_var()) return;
  for (const auto& d : ctx.classes.subclasses_of(c)) {
    Scope sc(s);
    if (s.unify(td, Term::atom(d))) k();
  }
}

void new_object(HeapContext& ctx, const Term& h, const Term& cls, const Term& ref, const Term& h_out, const Cont& k) {
  Store& s = ctx.store;
  Term c = s.deref(cls);
  if (!c.is_atom() || !ctx.classes.has(c.name())) throw std::invalid_argument("new_object: unknown class " + to_string(c));
  std::vector<std::pair<std::string, Term>> fields;
  for (const auto& fd : ctx.classes.all_fields(c.name())) fields.emplace_back(fd.name, zero_value(fd.type));
  Scope sc(s);
  Term key = Term::integer(new_ref(ctx, h));
  if (s.unify(ref, key) && s.unify(h_out, Term::cons(make_loc(key, make_object(c.name(), fields)), h))) k();
}

void new_array(HeapContext& ctx, const Term& h, const Term& type, const Term& len, const Term& ref,
               const Term& h_out, const Cont& k) {
  Store& s = ctx.store;
  Scope sc(s);
  if (!s.post({RelOp::Ge, len, Term::integer(0)})) return;
  s.for_each_value(len, [&] {
    std::int64_t n = s.deref(len).int_value();
    Scope inner(s);
    Term t = s.resolve(type);
    std::vector<Term> elems(static_cast<std::size_t>(n), zero_value(t));
    Term key = Term::integer(new_ref(ctx, h));
    Term cell = array_cell(t, Term::integer(n), Term::list(elems));
    if (s.unify(ref, key) && s.unify(h_out, Term::cons(make_loc(key, cell), h))) k();
  });
}

void length_of(HeapContext& ctx, const Term& h, const Term& ref, const Term& out, const Cont& k) {
  Store& s = ctx.store;
  get_cell(ctx, h, ref, [&](const Term& cell) {
    Scope sc(s);
    Term t = s.fresh_var(), len = s.fresh_var(), elems = s.fresh_var();
    if (s.unify(cell, array_cell(t, len, elems)) && s.post({RelOp::Ge, len, Term::integer(0)}) && s.unify(out, len))
      k();
  });
}

void get_field(HeapContext& ctx, const Term& h, const Term& ref, const Term& fsig, const Term& out, const Cont& k) {
  Store& s = ctx.store;
  auto [c, fn] = split_fsig(s, fsig);
  get_cell(ctx, h, ref, [&, c = c, fn = fn](const Term& cell) {
    Scope sc(s);
    Term t = s.fresh_var(), fields = s.fresh_var();
    if (!s.unify(cell, Term::compound("object", {t, fields}))) return;
    subclass(ctx, t, c, [&] {
      Scope inner(s);
      if (!ensure_fields(ctx, t, fields)) return;
      auto v = field_value(s, fields, fn);
      if (v && s.unify(out, *v)) k();
    });
  });
}

void set_field(HeapContext& ctx, const Term& h, const Term& ref, const Term& fsig, const Term& data,
               const Term& h_out, const Cont& k) {
  Store& s = ctx.store;
  auto [c, fn] = split_fsig(s, fsig);
  get_cell(ctx, h, ref, [&, c = c, fn = fn](const Term& cell) {
    Scope sc(s);
    Term t = s.fresh_var(), fields = s.fresh_var();
    if (!s.unify(cell, Term::compound("object", {t, fields}))) return;
    subclass(ctx, t, c, [&] {
      Scope inner(s);
      if (!ensure_fields(ctx, t, fields)) return;
      auto updated = replace_field(s, fields, fn, data);
      if (!updated) return;
      Term h2 = set_cell(ctx, h, ref, Term::compound("object", {t, *updated}));
      if (s.unify(h_out, h2)) k();
    });
  });
}

void get_array(HeapContext& ctx, const Term& h, const Term& ref, const Term& idx, const Term& out, const Cont& k) {
  Store& s = ctx.store;
  with_array(ctx, h, ref, [&](const Term&, const Term&, const std::vector<Term>& items) {
    for_each_index(ctx, idx, items.size(), [&](std::size_t i) {
      Scope sc(s);
      if (s.unify(out, items[i])) k();
    });
  });
}

void set_array(HeapContext& ctx, const Term& h, const Term& ref, const Term& idx, const Term& data,
               const Term& h_out, const Cont& k) {
  Store& s = ctx.store;
  with_array(ctx, h, ref, [&](const Term& t, const Term& len, const std::vector<Term>& items) {
    for_each_index(ctx, idx, items.size(), [&](std::size_t i) {
      Scope sc(s);
      std::vector<Term> updated = items;
      updated[i] = data;
      Term h2 = set_cell(ctx, h, ref, array_cell(t, len, Term::list(updated)));
      if (s.unify(h_out, h2)) k();
    });
  });
}

void type_guard(HeapContext& ctx, const Term& h, const Term& ref, const Term& type, const Cont& k) {
  Store& s = ctx.store;
  get_cell(ctx, h, ref, [&](const Term& cell) {
    Scope sc(s);
    if (s.unify(cell, Term::compound("object", {type, s.fresh_var()}))) k();
  });
}

}  // namespace tcg
