#include <algorithm>
#include <charconv>

#include "tcg/harness.hpp"

namespace tcg {

std::optional<Bounds> parse_bounds(std::string_view text) {
  auto dots = text.find("..");
  if (dots == std::string_view::npos) return std::nullopt;
  auto num = [](std::string_view s) -> std::optional<std::int64_t> {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
  };
  auto lo = num(text.substr(0, dots)), hi = num(text.substr(dots + 2));
  if (!lo || !hi || *lo > *hi) return std::nullopt;
  return Bounds{*lo, *hi};
}

namespace {

bool is_value_ref_type(const Term& t) { return !t.is_atom("int") && !t.is_atom("bool"); }

class Grounder {
 public:
  Grounder(const Resultant& r, const Program& p, const MethodInfo& m) : r_(r), s_(r.store), prog_(p), m_(m) {}

  Grounding run() {
    Grounding g;
    const Term& root = r_.root;
    args_in_ = root.arg(0);
    args_out_ = root.arg(1);
    h_in_ = root.arg(2);
    h_out_ = root.arg(3);
    ef_ = root.arg(4);
    if (!close(h_in_) || !close(h_out_)) return fail(g, "heap is not a list");
    if (!assign_keys()) return fail(g, "no distinct location keys within bounds");
    for (int pass = 0;; ++pass) {
      if (pass > 64) return fail(g, "heap closure did not converge");
      ints_.clear();
      types_.clear();
      grew_ = false;
      walk_roots();
      if (!label()) return fail(g, "path constraint unsatisfiable within bounds");
      if (!grew_) break;
    }
    if (!s_.ground_constraints_hold()) return fail(g, "constraint violated after labeling");

    std::set<std::int64_t> drop;
    auto in_locs = locations(h_in_), out_locs = locations(h_out_);
    for (const auto* locs : {&in_locs, &out_locs})
      for (const auto& l : *locs)
        if (s_.deref(l.arg(1)).is_var()) drop.insert(s_.deref(l.arg(0)).int_value());

    TestCase tc;
    tc.entry = m_.pred;
    tc.trace = r_.trace;
    std::vector<Term> items;
    if (!list_items(s_.resolve(args_in_), items)) return fail(g, "input arguments are not a list");
    tc.input_args = items;
    items.clear();
    if (!list_items(s_.resolve(args_out_), items)) return fail(g, "output arguments are not a list");
    tc.output_args = items;
    auto in_heap = closed_heap(in_locs, drop);
    auto out_heap = closed_heap(out_locs, drop);
    if (!in_heap || !out_heap) return fail(g, "duplicate location keys");
    tc.input_heap = *in_heap;
    g.full_output_heap = *out_heap;

    std::vector<VarId> left;
    for (const auto& t : tc.input_args) collect_vars(t, left);
    for (const auto& t : tc.output_args) collect_vars(t, left);
    collect_vars(tc.input_heap, left);
    collect_vars(*out_heap, left);
    if (!left.empty()) return fail(g, "value left unbound");

    Term ef = s_.resolve(ef_);
    if (ef.is_atom("ok")) {
      tc.output_heap = *out_heap;
    } else if (ef.is_compound("exc", 1) && ef.arg(0).is_int()) {
      auto cells = heap_map(*out_heap);
      auto it = cells.find(ef.arg(0).int_value());
      if (it == cells.end() || !it->second.is_compound("object", 2)) return fail(g, "exception object missing");
      tc.exflag = it->second.arg(0).name();
    } else {
      return fail(g, "exception flag not ground");
    }

    for (const auto& d : r_.delayed) {
      if (d.kind == LitKind::NoShare)
        g.properties_hold = g.properties_hold && noshare(tc.input_heap, s_.resolve(d.args[0]), s_.resolve(d.args[1]));
      else if (d.kind == LitKind::Acyclic)
        g.properties_hold = g.properties_hold && acyclic(tc.input_heap, s_.resolve(d.args[0]));
    }
    g.test = std::move(tc);
    return g;
  }

 private:
  static Grounding& fail(Grounding& g, std::string why) {
    g.error = std::move(why);
    return g;
  }

  bool close(const Term& h) {
    Term cur = s_.deref(h);
    while (cur.kind() == TermKind::Cons) cur = s_.deref(cur.arg(1));
    if (cur.is_var()) return s_.unify(cur, Term::nil());
    return cur.kind() == TermKind::Nil;
  }

  std::vector<Term> locations(const Term& h) const {
    std::vector<Term> out;
    for (Term cur = s_.deref(h); cur.kind() == TermKind::Cons; cur = s_.deref(cur.arg(1)))
      out.push_back(s_.deref(cur.arg(0)));
    return out;
  }

  std::optional<Term> closed_heap(const std::vector<Term>& locs, const std::set<std::int64_t>& drop) const {
    std::vector<Term> kept;
    std::set<std::int64_t> keys;
    for (const auto& l : locs) {
      std::int64_t k = s_.deref(l.arg(0)).int_value();
      if (drop.count(k)) continue;
      if (!keys.insert(k).second) return std::nullopt;
      kept.push_back(s_.resolve(l));
    }
    return Term::list(kept);
  }

  // Location keys in first-appearance order over inputs, then outputs.
  void collect_keys(const Term& t, std::vector<Term>& vars, std::set<std::int64_t>& ints, bool heap) const {
    Term d = s_.deref(t);
    if (heap) {
      for (const auto& l : locations(d)) {
        Term k = s_.deref(l.arg(0));
        if (k.is_var()) vars.push_back(k);
        else if (k.is_int()) ints.insert(k.int_value());
        collect_keys(l.arg(1), vars, ints, false);
      }
      return;
    }
    if (d.kind() == TermKind::Ref) {
      Term k = s_.deref(d.arg(0));
      if (k.is_var()) vars.push_back(k);
      else if (k.is_int()) ints.insert(k.int_value());
      return;
    }
    for (const auto& a : d.args()) collect_keys(a, vars, ints, false);
  }

  bool assign_keys() {
    std::vector<Term> vars;
    std::set<std::int64_t> used;
    collect_keys(args_in_, vars, used, false);
    collect_keys(h_in_, vars, used, true);
    collect_keys(args_out_, vars, used, false);
    collect_keys(h_out_, vars, used, true);
    collect_keys(ef_, vars, used, false);
    std::vector<Term> uniq;
    for (const auto& v : vars)
      if (std::none_of(uniq.begin(), uniq.end(), [&](const Term& u) { return s_.syntactic_eq(u, v); }))
        uniq.push_back(v);
    if (uniq.empty()) return true;
    Store::Mark m = s_.mark();
    std::int64_t next = 0;
    bool ok = true;
    for (const auto& v : uniq) {
      if (!s_.deref(v).is_var()) continue;
      while (used.count(next)) ++next;
      if (!s_.unify(v, Term::integer(next))) {
        ok = false;
        break;
      }
      used.insert(next++);
    }
    if (ok) return true;
    // Constrained keys: search for distinct non-negative values instead.
    s_.undo(m);
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      if (!s_.post({RelOp::Ge, uniq[i], Term::integer(0)})) return false;
      for (std::int64_t u : used)
        if (!s_.post({RelOp::Ne, uniq[i], Term::integer(u)})) return false;
      for (std::size_t j = 0; j < i; ++j)
        if (!s_.post({RelOp::Ne, uniq[i], uniq[j]})) return false;
    }
    return s_.label(uniq);
  }

  void walk_value(const Term& v, const Term* type) {
    Term t = s_.deref(v);
    if (t.is_var()) {
      if (type && is_value_ref_type(*type)) s_.unify(t, Term::null());
      else ints_.push_back(t);
      return;
    }
    if (t.kind() == TermKind::Ref) {
      Term k = s_.deref(t.arg(0));
      if (k.is_int() && type && !types_.count(k.int_value())) types_.emplace(k.int_value(), *type);
    }
  }

  void walk_roots() {
    std::vector<Term> items;
    list_items(s_.resolve(args_in_), items);
    for (std::size_t i = 0; i < items.size(); ++i)
      walk_value(items[i], i < m_.param_types.size() ? &m_.param_types[i] : nullptr);
    items.clear();
    list_items(s_.resolve(args_out_), items);
    for (const auto& it : items) walk_value(it, m_.ret_type ? &*m_.ret_type : nullptr);
    // Types propagate through cells, so sweep the heaps until no new key gets a type.
    for (std::size_t before = SIZE_MAX; before != types_.size();) {
      before = types_.size();
      for (const auto& h : {h_in_, h_out_})
        for (const auto& l : locations(h)) walk_cell(l);
    }
  }

  void walk_cell(const Term& loc) {
    Term key = s_.deref(loc.arg(0));
    Term cell = s_.deref(loc.arg(1));
    std::int64_t k = key.int_value();
    auto st = types_.find(k);
    const Term* stype = st == types_.end() ? nullptr : &st->second;
    if (cell.is_var()) {
      if (!stype) return;  // untouched and unreferenced: dropped
      s_.unify(cell, default_cell(*stype));
      grew_ = true;
      cell = s_.deref(cell);
    }
    if (cell.is_compound("object", 2)) {
      Term cls = s_.deref(cell.arg(0));
      if (cls.is_var()) {
        std::string c = stype && stype->is_atom() ? stype->name() : first_class();
        s_.unify(cls, Term::atom(c));
        cls = s_.deref(cls);
      }
      Term fields = s_.deref(cell.arg(1));
      if (fields.is_var()) s_.unify(fields, default_cell(cls).arg(1));
      std::vector<Term> fs;
      list_items(s_.resolve(cell.arg(1)), fs);
      for (const auto& f : fs) {
        if (!f.is_compound("field", 2)) continue;
        const FieldDecl* fd = prog_.classes.lookup_field(cls.name(), f.arg(0).name());
        walk_value(f.arg(1), fd ? &fd->type : nullptr);
      }
      return;
    }
    if (cell.is_compound("array", 3)) {
      Term et = s_.deref(cell.arg(0));
      if (et.is_var()) {
        Term want = stype && stype->is_compound("array", 1) ? stype->arg(0) : Term::atom("int");
        s_.unify(et, want);
        et = s_.deref(et);
      }
      Term len = s_.deref(cell.arg(1));
      Term elems = s_.deref(cell.arg(2));
      if (len.is_var()) {
        ints_.push_back(len);
        return;
      }
      if (elems.is_var()) {
        std::vector<Term> fresh;
        for (std::int64_t i = 0; i < len.int_value(); ++i) fresh.push_back(s_.fresh_var());
        s_.unify(elems, Term::list(fresh));
        grew_ = true;
      }
      std::vector<Term> es;
      list_items(s_.resolve(cell.arg(2)), es);
      for (const auto& e : es) walk_value(e, &et);
    }
  }

  std::string first_class() const {
    for (const auto& c : prog_.classes.classes())
      if (std::find(ClassTable::builtin_exceptions().begin(), ClassTable::builtin_exceptions().end(), c.name) ==
          ClassTable::builtin_exceptions().end())
        return c.name;
    return prog_.classes.classes().front().name;
  }

  Term default_cell(const Term& type) const {
    if (type.is_compound("array", 1)) return Term::compound("array", {type.arg(0), Term::integer(0), Term::nil()});
    std::vector<std::pair<std::string, Term>> fields;
    std::string c = type.is_atom() ? type.name() : first_class();
    for (const auto& fd : prog_.classes.all_fields(c)) fields.emplace_back(fd.name, zero_value(fd.type));
    return make_object(c, fields);
  }

  bool label() {
    std::vector<Term> vars;
    auto add = [&](const Term& t) {
      Term d = s_.deref(t);
      if (!d.is_var()) return;
      for (const auto& v : vars)
        if (v.var_id() == d.var_id()) return;
      vars.push_back(d);
    };
    for (const auto& t : ints_) add(t);
    for (const auto& c : s_.constraints()) {
      std::vector<VarId> vs;
      collect_vars(s_.resolve(c.lhs), vs);
      collect_vars(s_.resolve(c.rhs), vs);
      for (VarId v : vs) add(Term::var(v));
    }
    if (vars.empty()) return true;
    return s_.label(vars);
  }

  const Resultant& r_;
  Store s_;
  const Program& prog_;
  const MethodInfo& m_;
  Term args_in_, args_out_, h_in_, h_out_, ef_;
  std::vector<Term> ints_;
  std::map<std::int64_t, Term> types_;
  bool grew_ = false;
};

}  // namespace

Grounding ground_resultant(const Resultant& r, const Program& prog, const MethodInfo& method) {
  return Grounder(r, prog, method).run();
}

}  // namespace tcg
