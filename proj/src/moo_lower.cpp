#include <cctype>
#include <stdexcept>

#include "moo_internal.hpp"

namespace tcg::moo {

namespace {

void term_slots(const Term& t, std::set<int>& out) {
  std::vector<VarId> vs;
  collect_vars(t, vs);
  for (VarId v : vs) out.insert(static_cast<int>(v));
}

// Live slots at the start of an arm, given live-in sets of the targets.
std::set<int> arm_live_in(const Arm& a, const std::vector<std::set<int>>& live) {
  std::set<int> l;
  switch (a.term.kind) {
    case Terminator::Kind::Goto: l = live[a.term.target]; break;
    case Terminator::Kind::Return:
      if (a.term.value) term_slots(*a.term.value, l);
      break;
    case Terminator::Kind::Rethrow: l.insert(a.term.slot); break;
    default: break;
  }
  for (auto it = a.instrs.rbegin(); it != a.instrs.rend(); ++it) {
    if (it->dst >= 0) l.erase(it->dst);
    if (it->ef >= 0) l.erase(it->ef);
    switch (it->op) {
      case Instr::Op::Const:
      case Instr::Op::New: break;
      case Instr::Op::NewArray: term_slots(it->b, l); break;
      default:
        term_slots(it->a, l);
        term_slots(it->b, l);
        term_slots(it->c, l);
    }
  }
  if (a.guard) {
    term_slots(a.guard->a, l);
    term_slots(a.guard->b, l);
  }
  if (a.type_guard) l.insert(a.type_guard->first);
  if (a.ref_neq) {
    l.insert(a.ref_neq->first);
    l.insert(a.ref_neq->second);
  }
  for (const auto& p : a.patterns) {
    l.insert(p.slot);
    if (p.kind == Pattern::Kind::Same) l.insert(p.other);
  }
  return l;
}

void compute_params(MethodCfg& m) {
  std::vector<std::set<int>> live(m.blocks.size());
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t b = m.blocks.size(); b-- > 0;) {
      std::set<int> in;
      for (const auto& a : m.blocks[b].arms) {
        auto s = arm_live_in(a, live);
        in.insert(s.begin(), s.end());
      }
      if (in != live[b]) {
        live[b] = std::move(in);
        changed = true;
      }
    }
  }
  int nparams = static_cast<int>(m.method->params.size()) + 1;
  for (int s : live[0])
    if (s >= nparams) throw std::logic_error("slot " + m.slot_names[s] + " used before definition in " + m.method->pred());
  for (int s = 0; s < nparams; ++s) m.blocks[0].params.push_back(s);
  for (std::size_t b = 1; b < m.blocks.size(); ++b) m.blocks[b].params.assign(live[b].begin(), live[b].end());
}

std::string var_base(const std::string& slot_name) {
  if (slot_name == "this") return "Th";
  std::string n = slot_name[0] == '$' ? slot_name.substr(1) : slot_name;
  if (n.empty()) n = "V";
  n[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(n[0])));
  if (n[0] == '_') n = "V" + n;
  return n;
}

class ArmEmitter {
 public:
  ArmEmitter(const MethodCfg& m, const Block& b, const Arm& a) : m_(m), b_(b), a_(a) {}

  Clause run() {
    Clause c;
    std::set<int> refs(b_.ref_slots.begin(), b_.ref_slots.end());
    std::map<int, Pattern::Kind> pat;
    for (const auto& p : a_.patterns)
      if (p.kind != Pattern::Kind::Same) pat[p.slot] = p.kind;
    for (const auto& p : a_.patterns)
      if (p.kind == Pattern::Kind::Same && (refs.count(p.slot) || refs.count(p.other))) {
        refs.insert(p.slot);
        refs.insert(p.other);
      }
    for (int s : b_.params) {
      if (env_.count(s)) continue;
      auto it = pat.find(s);
      Pattern::Kind k = it != pat.end() ? it->second : refs.count(s) ? Pattern::Kind::Ref : Pattern::Kind::Same;
      if (it == pat.end() && !refs.count(s)) {
        env_[s] = fresh(var_base(m_.slot_names[s]));
      } else {
        switch (k) {
          case Pattern::Kind::Ref: env_[s] = Term::ref(fresh(var_base(m_.slot_names[s]))); break;
          case Pattern::Kind::Null: env_[s] = Term::null(); break;
          case Pattern::Kind::Ok: env_[s] = Term::atom("ok"); break;
          case Pattern::Kind::Exc: env_[s] = Term::compound("exc", {fresh("ExRef")}); break;
          case Pattern::Kind::Same: break;
        }
      }
      for (const auto& p : a_.patterns)
        if (p.kind == Pattern::Kind::Same && (p.slot == s || p.other == s)) env_[p.slot == s ? p.other : p.slot] = env_[s];
    }
    std::vector<Term> in;
    for (int s : b_.params) in.push_back(env_.at(s));
    c.args_in = Term::list(in);
    h_ = fresh("H");
    c.h_in = h_;

    if (a_.guard) {
      Literal l;
      l.kind = LitKind::Compare;
      l.op = a_.guard->rel;
      l.args = {subst(a_.guard->a), subst(a_.guard->b)};
      c.guard = l;
    } else if (a_.type_guard) {
      Literal l;
      l.kind = LitKind::TypeGuard;
      l.args = {h_, key(a_.type_guard->first), Term::atom(a_.type_guard->second)};
      c.guard = l;
    } else if (a_.ref_neq) {
      Literal l;
      l.kind = LitKind::RefNeq;
      l.args = {env_.at(a_.ref_neq->first), env_.at(a_.ref_neq->second)};
      c.guard = l;
    }
    for (const auto& i : a_.instrs) instr(c, i);
    terminate(c);
    c.var_names = names_;
    return c;
  }

 private:
  Term fresh(const std::string& base) {
    std::string n = base;
    while (used_.count(n)) n += "'";
    used_.insert(n);
    names_.push_back(n);
    return Term::var(static_cast<VarId>(names_.size() - 1));
  }

  Term fresh_heap() { return fresh("H"); }

  Term key(int slot) const {
    Term t = env_.at(slot);
    if (t.kind() != TermKind::Ref) throw std::logic_error("slot " + m_.slot_names[slot] + " is not a location in " + b_.name);
    return t.arg(0);
  }

  Term subst(const Term& t) const {
    switch (t.kind()) {
      case TermKind::Var: return env_.at(static_cast<int>(t.var_id()));
      case TermKind::Compound: {
        if (t.is_compound("$key", 1)) return key(static_cast<int>(t.arg(0).var_id()));
        std::vector<Term> args;
        for (std::size_t i = 0; i < t.arity(); ++i) args.push_back(subst(t.arg(i)));
        return Term::compound(t.name(), args);
      }
      case TermKind::Cons: return Term::cons(subst(t.arg(0)), subst(t.arg(1)));
      default: return t;
    }
  }

  void instr(Clause& c, const Instr& i) {
    Literal l;
    auto def = [&](const Term& v) { env_[i.dst] = v; };
    auto field = [&] { return Term::compound(":", {Term::atom(i.name), i.b}); };
    switch (i.op) {
      case Instr::Op::Copy: def(env_.at(static_cast<int>(i.a.var_id()))); return;
      case Instr::Op::Const: def(i.a); return;
      case Instr::Op::Compare:
        l.kind = LitKind::Compare;
        l.op = i.rel;
        l.args = {subst(i.a), subst(i.b)};
        break;
      case Instr::Op::Assign: {
        Term rhs = subst(i.a);
        Term x = fresh(var_base(m_.slot_names[i.dst]));
        l.kind = LitKind::Assign;
        l.args = {x, rhs};
        def(x);
        break;
      }
      case Instr::Op::GetField: {
        Term k = subst(i.a);
        Term x = fresh(var_base(m_.slot_names[i.dst]));
        l.kind = LitKind::GetField;
        l.args = {h_, k, field(), x};
        def(x);
        break;
      }
      case Instr::Op::SetField: {
        Term h2 = fresh_heap();
        l.kind = LitKind::SetField;
        l.args = {h_, subst(i.a), field(), subst(i.c), h2};
        h_ = h2;
        break;
      }
      case Instr::Op::New: {
        Term k = fresh(var_base(m_.slot_names[i.dst]));
        Term h2 = fresh_heap();
        l.kind = LitKind::NewObject;
        l.args = {h_, Term::atom(i.name), k, h2};
        h_ = h2;
        def(Term::ref(k));
        break;
      }
      case Instr::Op::NewArray: {
        Term n = subst(i.b);
        Term k = fresh(var_base(m_.slot_names[i.dst]));
        Term h2 = fresh_heap();
        l.kind = LitKind::NewArray;
        l.args = {h_, i.a, n, k, h2};
        h_ = h2;
        def(Term::ref(k));
        break;
      }
      case Instr::Op::Length: {
        Term k = subst(i.a);
        Term x = fresh(var_base(m_.slot_names[i.dst]));
        l.kind = LitKind::Length;
        l.args = {h_, k, x};
        def(x);
        break;
      }
      case Instr::Op::GetArray: {
        Term k = subst(i.a), ix = subst(i.b);
        Term x = fresh(var_base(m_.slot_names[i.dst]));
        l.kind = LitKind::GetArray;
        l.args = {h_, k, ix, x};
        def(x);
        break;
      }
      case Instr::Op::SetArray: {
        Term h2 = fresh_heap();
        l.kind = LitKind::SetArray;
        l.args = {h_, subst(i.a), subst(i.b), subst(i.c), h2};
        h_ = h2;
        break;
      }
      case Instr::Op::Call: {
        Term args = subst(i.a);
        std::vector<Term> out;
        if (i.dst >= 0) out.push_back(fresh(var_base(m_.slot_names[i.dst])));
        Term h2 = fresh_heap();
        Term ef = fresh("EF");
        l.kind = LitKind::Call;
        l.pred = i.name;
        l.args = {args, Term::list(out), h_, h2, ef};
        h_ = h2;
        if (i.dst >= 0) def(out[0]);
        env_[i.ef] = ef;
        break;
      }
    }
    c.body.push_back(std::move(l));
  }

  std::vector<Term> dummy_out() {
    if (!m_.method->ret) return {};
    return {fresh("_")};
  }

  void terminate(Clause& c) {
    const Terminator& t = a_.term;
    switch (t.kind) {
      case Terminator::Kind::Goto: {
        const Block& target = m_.blocks[t.target];
        std::vector<Term> args;
        for (int s : target.params) args.push_back(env_.at(s));
        std::vector<Term> out;
        if (m_.method->ret) out.push_back(fresh("Ret"));
        Term h2 = fresh_heap();
        Term ef = fresh("EF");
        Literal l;
        l.kind = LitKind::Call;
        l.pred = target.name;
        l.args = {Term::list(args), Term::list(out), h_, h2, ef};
        c.body.push_back(std::move(l));
        c.args_out = Term::list(out);
        c.h_out = h2;
        c.exflag = ef;
        return;
      }
      case Terminator::Kind::Return: {
        std::vector<Term> out;
        if (t.value) out.push_back(subst(*t.value));
        c.args_out = Term::list(out);
        c.h_out = h_;
        c.exflag = Term::atom("ok");
        return;
      }
      case Terminator::Kind::Throw: {
        Term e = fresh("ExRef");
        Term h2 = fresh_heap();
        Literal l;
        l.kind = LitKind::NewObject;
        l.args = {h_, Term::atom(t.cls), e, h2};
        c.body.push_back(std::move(l));
        c.args_out = Term::list(dummy_out());
        c.h_out = h2;
        c.exflag = Term::compound("exc", {e});
        return;
      }
      case Terminator::Kind::Rethrow:
        c.args_out = Term::list(dummy_out());
        c.h_out = h_;
        c.exflag = env_.at(t.slot);
        return;
      case Terminator::Kind::None: throw std::logic_error("unterminated arm in " + b_.name);
    }
  }

  const MethodCfg& m_;
  const Block& b_;
  const Arm& a_;
  std::map<int, Term> env_;
  std::vector<std::string> names_;
  std::set<std::string> used_;
  Term h_;
};

}  // namespace

Program lower(const Cfg& cfg_in, const SourceAst& ast) {
  Cfg cfg = cfg_in;
  Program p;
  p.classes = ast.table;
  for (auto& m : cfg.methods) {
    compute_params(m);
    for (const auto& b : m.blocks) {
      Predicate& pred = p.get_or_add(b.name);
      for (const auto& a : b.arms) {
        Clause c = ArmEmitter(m, b, a).run();
        c.pos = m.method->pos;
        pred.clauses.push_back(std::move(c));
      }
    }
  }
  for (const auto& c : ast.classes)
    for (const auto& m : c.methods) {
      if (!m.body) continue;
      MethodInfo info;
      info.pred = m.pred();
      info.cls = m.cls;
      info.name = m.name;
      info.param_names.push_back("this");
      info.param_types.push_back(Term::atom(m.cls));
      for (const auto& [n, t] : m.params) {
        info.param_names.push_back(n);
        info.param_types.push_back(t);
      }
      info.ret_type = m.ret;
      p.entries.push_back(std::move(info));
    }
  return p;
}

CompileResult compile_source(std::string_view text) {
  CompileResult r;
  auto parsed = parse_source(text);
  r.diagnostics = std::move(parsed.diagnostics);
  if (!parsed.ast || has_errors(r.diagnostics)) return r;
  try {
    Program p = lower(build_cfg(*parsed.ast), *parsed.ast);
    auto v = validate(p);
    bool bad = has_errors(v);
    for (auto& d : v) {
      d.message = "internal: " + d.message;
      r.diagnostics.push_back(std::move(d));
    }
    if (!bad) r.program = std::move(p);
  } catch (const std::logic_error& e) {
    r.diagnostics.push_back({Diagnostic::Severity::Error, {}, std::string("internal: ") + e.what()});
  }
  return r;
}

}  // namespace tcg::moo
