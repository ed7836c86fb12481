#include <sstream>

#include "tcg/ir.hpp"

namespace tcg {

namespace {

class Validator {
 public:
  explicit Validator(const Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    check_classes();
    for (const auto& m : p_.entries) {
      if (!p_.find(m.pred)) error({}, "method " + m.pred + " has no predicate");
      if (!p_.classes.has(m.cls)) error({}, "method " + m.pred + " belongs to unknown class " + m.cls);
      for (const auto& t : m.param_types) check_type(t, {}, "parameter of " + m.pred);
      if (m.ret_type) check_type(*m.ret_type, {}, "return type of " + m.pred);
    }
    for (const auto& pred : p_.predicates) {
      for (const auto& c : pred.clauses) check_clause(pred.name, c);
      for (std::size_t i = 0; i < pred.clauses.size(); ++i)
        for (std::size_t j = i + 1; j < pred.clauses.size(); ++j)
          if (!exclusive(pred.clauses[i], pred.clauses[j]))
            warn(pred.clauses[j].pos, "clauses may overlap: " + pred.name + " clauses " + std::to_string(i + 1) +
                                          " and " + std::to_string(j + 1));
    }
    return std::move(out_);
  }

 private:
  void error(SourcePos pos, std::string msg) { out_.push_back({Diagnostic::Severity::Error, pos, std::move(msg)}); }
  void warn(SourcePos pos, std::string msg) { out_.push_back({Diagnostic::Severity::Warning, pos, std::move(msg)}); }

  void check_type(const Term& t, SourcePos pos, const std::string& what) {
    if (t.is_compound("array", 1)) return check_type(t.arg(0), pos, what);
    if (t.is_atom("int") || t.is_atom("bool")) return;
    if (t.is_atom() && p_.classes.has(t.name())) return;
    error(pos, "unknown type " + to_string(t) + " in " + what);
  }

  void check_classes() {
    const auto& ct = p_.classes;
    if (auto c = ct.find_cycle()) error({}, "superclass cycle through " + *c);
    for (const auto& c : ct.classes()) {
      if (c.super && !ct.has(*c.super)) error({}, "class " + c.name + " extends unknown class " + *c.super);
      for (std::size_t i = 0; i < c.fields.size(); ++i) {
        check_type(c.fields[i].type, {}, "field " + c.name + ":" + c.fields[i].name);
        for (std::size_t j = 0; j < i; ++j)
          if (c.fields[j].name == c.fields[i].name) error({}, "duplicate field " + c.name + ":" + c.fields[i].name);
        if (c.super && !ct.find_cycle() && ct.lookup_field(*c.super, c.fields[i].name))
          error({}, "field " + c.name + ":" + c.fields[i].name + " shadows an inherited field");
      }
    }
  }

  void check_class_term(const Term& t, SourcePos pos) {
    if (t.is_var()) return;
    if (!t.is_atom() || !p_.classes.has(t.name())) error(pos, "unknown class " + to_string(t));
  }

  void check_fsig(const Term& t, SourcePos pos) {
    if (t.is_var()) return;
    if (!t.is_compound(":", 2) || !t.arg(0).is_atom() || !t.arg(1).is_atom()) {
      error(pos, "malformed field signature " + to_string(t));
      return;
    }
    const auto& c = t.arg(0).name();
    if (!p_.classes.has(c)) {
      error(pos, "unknown class " + c + " in field signature");
      return;
    }
    if (!p_.classes.lookup_field(c, t.arg(1).name())) error(pos, "class " + c + " has no field " + t.arg(1).name());
  }

  void check_clause(const std::string& pred, const Clause& c) {
    const auto* names = &c.var_names;
    if (!c.h_in.is_var() || !c.h_out.is_var()) error(c.pos, pred + ": heap arguments must be variables");
    const Term& ef = c.exflag;
    if (!(ef.is_var() || ef.is_atom("ok") || (ef.is_compound("exc", 1) && ef.arg(0).is_var())))
      error(c.pos, pred + ": malformed exception flag " + to_string(ef, names));

    Term cur = c.h_in;
    bool threaded = c.h_in.is_var() && c.h_out.is_var();
    auto heap_in = [&](const Term& h) {
      if (!h.identical(cur)) threaded = false;
    };
    auto heap_out = [&](const Term& h) {
      if (!h.is_var() || h.identical(cur)) threaded = false;
      cur = h;
    };

    std::vector<const Literal*> lits;
    if (c.guard) lits.push_back(&*c.guard);
    for (const auto& l : c.body) lits.push_back(&l);
    for (const Literal* lp : lits) {
      const Literal& l = *lp;
      SourcePos pos = l.pos.line ? l.pos : c.pos;
      switch (l.kind) {
        case LitKind::Compare:
        case LitKind::Assign:
        case LitKind::RefNeq:
          break;
        case LitKind::TypeGuard:
          heap_in(l.args[0]);
          check_class_term(l.args[2], pos);
          break;
        case LitKind::Call:
          if (!p_.find(l.pred)) error(pos, pred + ": call to undefined predicate " + l.pred);
          heap_in(l.args[2]);
          heap_out(l.args[3]);
          break;
        case LitKind::NewObject:
          heap_in(l.args[0]);
          check_class_term(l.args[1], pos);
          heap_out(l.args[3]);
          break;
        case LitKind::NewArray:
          heap_in(l.args[0]);
          if (!l.args[1].is_var()) check_type(l.args[1], pos, "new_array");
          heap_out(l.args[4]);
          break;
        case LitKind::Length:
        case LitKind::GetArray:
          heap_in(l.args[0]);
          break;
        case LitKind::GetField:
          heap_in(l.args[0]);
          check_fsig(l.args[2], pos);
          break;
        case LitKind::SetField:
          heap_in(l.args[0]);
          check_fsig(l.args[2], pos);
          heap_out(l.args[4]);
          break;
        case LitKind::SetArray:
          heap_in(l.args[0]);
          heap_out(l.args[4]);
          break;
        case LitKind::Unify:
        case LitKind::Member:
        case LitKind::NoShare:
        case LitKind::Acyclic:
          error(pos, pred + ": " + std::string(builtin_name(l.kind).empty() ? "=" : builtin_name(l.kind)) +
                         " is not allowed in a clause body");
          break;
      }
    }
    if (!cur.identical(c.h_out)) threaded = false;
    if (!threaded) error(c.pos, pred + ": heap not threaded linearly");
  }

  // Conservative: true only when the two clauses provably never both apply.
  bool exclusive(const Clause& a, const Clause& b) const {
    Store s;
    VarId oa = s.fresh_block(a.num_vars());
    VarId ob = s.fresh_block(b.num_vars());
    if (!s.unify(shift_vars(a.args_in, oa), shift_vars(b.args_in, ob))) return true;
    auto renamed = [](const std::optional<Literal>& g, VarId off) {
      std::optional<Literal> out = g;
      if (out)
        for (auto& t : out->args) t = shift_vars(t, off);
      return out;
    };
    auto refneq_refuted = [&](const std::optional<Literal>& g) {
      return g && g->kind == LitKind::RefNeq && s.syntactic_eq(g->args[0], g->args[1]);
    };
    auto oga = renamed(a.guard, oa), ogb = renamed(b.guard, ob);
    if (refneq_refuted(oga) || refneq_refuted(ogb)) return true;
    if (!oga || !ogb) return false;
    const Literal& ga = *oga;
    const Literal& gb = *ogb;
    if (ga.kind == LitKind::Compare && gb.kind == LitKind::Compare) {
      // same operands under complementary relations; propagation misses nonlinear ones
      if (gb.op == negate(ga.op) && s.syntactic_eq(ga.args[0], gb.args[0]) && s.syntactic_eq(ga.args[1], gb.args[1]))
        return true;
      return !(s.post({ga.op, ga.args[0], ga.args[1]}) && s.post({gb.op, gb.args[0], gb.args[1]}));
    }
    if (ga.kind == LitKind::TypeGuard && gb.kind == LitKind::TypeGuard) {
      Term ta = s.deref(ga.args[2]), tb = s.deref(gb.args[2]);
      return s.syntactic_eq(ga.args[1], gb.args[1]) && ta.is_atom() && tb.is_atom() && ta.name() != tb.name();
    }
    return false;
  }

  const Program& p_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const Program& p) { return Validator(p).run(); }

}  // namespace tcg
