#include <algorithm>
#include <functional>
#include <ostream>
#include <sstream>

#include "tcg/ir.hpp"

namespace tcg {

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << pos.line << ':' << pos.col << ": " << (is_error() ? "error" : "warning") << ": " << message;
  return os.str();
}

bool has_errors(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.is_error(); });
}

const std::vector<std::string>& ClassTable::builtin_exceptions() {
  static const std::vector<std::string> names = {"NPE", "OOB", "ARITH"};
  return names;
}

ClassTable::ClassTable() {
  for (const auto& n : builtin_exceptions()) classes_.push_back({n, std::nullopt, {}});
}

void ClassTable::add(ClassInfo c) {
  for (auto& existing : classes_) {
    if (existing.name == c.name) {
      existing = std::move(c);
      return;
    }
  }
  classes_.push_back(std::move(c));
}

const ClassInfo* ClassTable::find(std::string_view name) const {
  for (const auto& c : classes_)
    if (c.name == name) return &c;
  return nullptr;
}

bool ClassTable::is_subclass(std::string_view sub, std::string_view super) const {
  std::string cur(sub);
  for (std::size_t steps = 0; steps <= classes_.size(); ++steps) {
    if (cur == super) return true;
    const ClassInfo* c = find(cur);
    if (!c || !c->super) return false;
    cur = *c->super;
  }
  return false;
}

std::vector<std::string> ClassTable::subclasses_of(std::string_view c) const {
  std::vector<std::string> out;
  if (!has(c)) return out;
  out.emplace_back(c);
  for (const auto& k : classes_)
    if (k.name != c && is_subclass(k.name, c)) out.push_back(k.name);
  return out;
}

std::vector<FieldDecl> ClassTable::all_fields(std::string_view c) const {
  std::vector<const ClassInfo*> chain;
  const ClassInfo* cur = find(c);
  while (cur && chain.size() <= classes_.size()) {
    chain.push_back(cur);
    cur = cur->super ? find(*cur->super) : nullptr;
  }
  std::vector<FieldDecl> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    for (const auto& f : (*it)->fields) out.push_back(f);
  return out;
}

const FieldDecl* ClassTable::lookup_field(std::string_view c, std::string_view field) const {
  const ClassInfo* cur = find(c);
  for (std::size_t steps = 0; cur && steps <= classes_.size(); ++steps) {
    for (const auto& f : cur->fields)
      if (f.name == field) return &f;
    cur = cur->super ? find(*cur->super) : nullptr;
  }
  return nullptr;
}

std::optional<std::string> ClassTable::find_cycle() const {
  for (const auto& c : classes_) {
    std::string cur = c.name;
    for (std::size_t steps = 0; steps <= classes_.size(); ++steps) {
      const ClassInfo* k = find(cur);
      if (!k || !k->super) break;
      cur = *k->super;
      if (cur == c.name) return c.name;
    }
  }
  return std::nullopt;
}

std::string_view builtin_name(LitKind k) {
  switch (k) {
    case LitKind::TypeGuard: return "type";
    case LitKind::NewObject: return "new_object";
    case LitKind::NewArray: return "new_array";
    case LitKind::Length: return "length";
    case LitKind::GetField: return "get_field";
    case LitKind::SetField: return "set_field";
    case LitKind::GetArray: return "get_array";
    case LitKind::SetArray: return "set_array";
    case LitKind::Member: return "member";
    case LitKind::NoShare: return "noshare";
    case LitKind::Acyclic: return "acyclic";
    default: return "";
  }
}

std::vector<Term> Clause::all_terms() const {
  std::vector<Term> out = {args_in, args_out, h_in, h_out, exflag};
  auto add = [&](const Literal& l) {
    for (const auto& a : l.args) out.push_back(a);
  };
  if (guard) add(*guard);
  for (const auto& l : body) add(l);
  return out;
}

const Predicate* Program::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it != index_.end()) return &predicates[it->second];
  for (const auto& p : predicates)
    if (p.name == name) return &p;
  return nullptr;
}

Predicate& Program::get_or_add(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end() && it->second < predicates.size() && predicates[it->second].name == name)
    return predicates[it->second];
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (predicates[i].name == name) {
      index_[name] = i;
      return predicates[i];
    }
  }
  predicates.push_back({name, {}});
  index_[name] = predicates.size() - 1;
  return predicates.back();
}

const MethodInfo* Program::entry(std::string_view pred) const {
  for (const auto& m : entries)
    if (m.pred == pred) return &m;
  return nullptr;
}

std::string type_to_string(const Term& t) {
  if (t.is_compound("array", 1)) return "array(" + type_to_string(t.arg(0)) + ")";
  if (t.is_atom()) return t.name();
  return to_string(t);
}

void print_literal(std::ostream& os, const Literal& l, const std::vector<std::string>* names) {
  auto term = [&](const Term& t) { print_term(os, t, names); };
  switch (l.kind) {
    case LitKind::Compare:
    case LitKind::Assign:
      term(l.args[0]);
      os << ' ' << relop_symbol(l.op) << ' ';
      term(l.args[1]);
      return;
    case LitKind::RefNeq:
      term(l.args[0]);
      os << " \\== ";
      term(l.args[1]);
      return;
    case LitKind::Unify:
      term(l.args[0]);
      os << " = ";
      term(l.args[1]);
      return;
    case LitKind::Call:
      os << to_string(Term::atom(l.pred));
      break;
    default:
      os << builtin_name(l.kind);
      break;
  }
  os << '(';
  for (std::size_t i = 0; i < l.args.size(); ++i) {
    if (i) os << ',';
    term(l.args[i]);
  }
  os << ')';
}

void print_clause(std::ostream& os, const std::string& pred, const Clause& c) {
  const auto* names = &c.var_names;
  os << to_string(Term::atom(pred)) << '(';
  print_term(os, c.args_in, names);
  os << ',';
  print_term(os, c.args_out, names);
  os << ',';
  print_term(os, c.h_in, names);
  os << ',';
  print_term(os, c.h_out, names);
  os << ',';
  print_term(os, c.exflag, names);
  os << ')';
  std::vector<const Literal*> lits;
  if (c.guard) lits.push_back(&*c.guard);
  for (const auto& l : c.body) lits.push_back(&l);
  if (!lits.empty()) {
    os << " :-";
    for (std::size_t i = 0; i < lits.size(); ++i) {
      os << (i ? ",\n    " : "\n    ");
      print_literal(os, *lits[i], names);
    }
  }
  os << ".\n";
}

void print_program(std::ostream& os, const Program& p) {
  const auto& builtins = ClassTable::builtin_exceptions();
  for (const auto& c : p.classes.classes()) {
    if (std::find(builtins.begin(), builtins.end(), c.name) != builtins.end() && !c.super && c.fields.empty())
      continue;
    os << ":- class(" << to_string(Term::atom(c.name)) << ", "
       << (c.super ? to_string(Term::atom(*c.super)) : std::string("none")) << ", [";
    for (std::size_t i = 0; i < c.fields.size(); ++i) {
      if (i) os << ", ";
      os << "field(" << to_string(Term::atom(c.fields[i].name)) << ", " << c.fields[i].type << ')';
    }
    os << "]).\n";
  }
  for (const auto& m : p.entries) {
    os << ":- method(" << to_string(Term::atom(m.pred)) << ", [";
    for (std::size_t i = 0; i < m.param_types.size(); ++i) {
      if (i) os << ", ";
      os << m.param_types[i];
    }
    os << "], " << (m.ret_type ? to_string(*m.ret_type) : std::string("void")) << ").\n";
  }
  for (const auto& pred : p.predicates) {
    os << '\n';
    for (const auto& c : pred.clauses) print_clause(os, pred.name, c);
  }
}

std::string program_to_string(const Program& p) {
  std::ostringstream os;
  print_program(os, p);
  return os.str();
}

namespace {

Term rename(const Term& t, const std::vector<VarId>& map) {
  switch (t.kind()) {
    case TermKind::Var:
      return Term::var(map[t.var_id()]);
    case TermKind::Ref:
      return Term::ref(rename(t.arg(0), map));
    case TermKind::Cons:
      return Term::cons(rename(t.arg(0), map), rename(t.arg(1), map));
    case TermKind::Compound: {
      std::vector<Term> args;
      for (const auto& a : t.args()) args.push_back(rename(a, map));
      return Term::compound(t.name(), std::move(args));
    }
    default:
      return t;
  }
}

void for_each_term(Clause& c, const std::function<void(Term&)>& f) {
  f(c.args_in);
  f(c.args_out);
  f(c.h_in);
  f(c.h_out);
  f(c.exflag);
  if (c.guard)
    for (auto& a : c.guard->args) f(a);
  for (auto& l : c.body)
    for (auto& a : l.args) f(a);
}

bool alpha_eq(const Term& a, const Term& b, std::map<VarId, VarId>& ab, std::map<VarId, VarId>& ba) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Var: {
      auto x = a.var_id(), y = b.var_id();
      auto i = ab.find(x);
      auto j = ba.find(y);
      if (i == ab.end() && j == ba.end()) {
        ab[x] = y;
        ba[y] = x;
        return true;
      }
      return i != ab.end() && j != ba.end() && i->second == y && j->second == x;
    }
    case TermKind::Int:
      return a.int_value() == b.int_value();
    case TermKind::Null:
    case TermKind::Nil:
      return true;
    case TermKind::Atom:
      return a.name() == b.name();
    case TermKind::Compound:
      if (a.name() != b.name()) return false;
      [[fallthrough]];
    case TermKind::Ref:
    case TermKind::Cons:
      if (a.arity() != b.arity()) return false;
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (!alpha_eq(a.arg(i), b.arg(i), ab, ba)) return false;
      return true;
  }
  return false;
}

bool same_literal_shape(const Literal& a, const Literal& b) {
  return a.kind == b.kind && a.op == b.op && a.pred == b.pred && a.args.size() == b.args.size();
}

}  // namespace

void normalize_vars(Clause& c) {
  std::vector<VarId> order;
  for (const auto& t : c.all_terms()) collect_vars(t, order);
  std::vector<VarId> map(c.var_names.size(), -1);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < order.size(); ++i) {
    map[order[i]] = static_cast<VarId>(i);
    names.push_back(order[i] < static_cast<VarId>(c.var_names.size()) ? c.var_names[order[i]] : std::string());
  }
  for_each_term(c, [&](Term& t) { t = rename(t, map); });
  c.var_names = std::move(names);
}

bool clauses_alpha_equal(const Clause& a, const Clause& b) {
  if (a.guard.has_value() != b.guard.has_value() || a.body.size() != b.body.size()) return false;
  if (a.guard && !same_literal_shape(*a.guard, *b.guard)) return false;
  for (std::size_t i = 0; i < a.body.size(); ++i)
    if (!same_literal_shape(a.body[i], b.body[i])) return false;
  auto ta = a.all_terms(), tb = b.all_terms();
  if (ta.size() != tb.size()) return false;
  std::map<VarId, VarId> ab, ba;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!alpha_eq(ta[i], tb[i], ab, ba)) return false;
  return true;
}

bool programs_equal(const Program& a, const Program& b) {
  if (a.predicates.size() != b.predicates.size()) return false;
  for (std::size_t i = 0; i < a.predicates.size(); ++i) {
    const auto& pa = a.predicates[i];
    const auto& pb = b.predicates[i];
    if (pa.name != pb.name || pa.clauses.size() != pb.clauses.size()) return false;
    for (std::size_t j = 0; j < pa.clauses.size(); ++j)
      if (!clauses_alpha_equal(pa.clauses[j], pb.clauses[j])) return false;
  }
  const auto& ca = a.classes.classes();
  const auto& cb = b.classes.classes();
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (ca[i].name != cb[i].name || ca[i].super != cb[i].super || ca[i].fields.size() != cb[i].fields.size())
      return false;
    for (std::size_t j = 0; j < ca[i].fields.size(); ++j)
      if (ca[i].fields[j].name != cb[i].fields[j].name || !ca[i].fields[j].type.identical(cb[i].fields[j].type))
        return false;
  }
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& x = a.entries[i];
    const auto& y = b.entries[i];
    if (x.pred != y.pred || x.param_types.size() != y.param_types.size()) return false;
    for (std::size_t j = 0; j < x.param_types.size(); ++j)
      if (!x.param_types[j].identical(y.param_types[j])) return false;
    if (x.ret_type.has_value() != y.ret_type.has_value()) return false;
    if (x.ret_type && !x.ret_type->identical(*y.ret_type)) return false;
  }
  return true;
}

}  // namespace tcg
