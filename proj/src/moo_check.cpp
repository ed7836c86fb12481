#include <set>

#include "moo_internal.hpp"

namespace tcg::moo {

Term null_type() { return Term::atom("$null"); }

bool is_ref_type(const Term& t) {
  return t.is_compound("array", 1) || (t.is_atom() && t.name() != "int" && t.name() != "bool");
}

const ClassDecl* SourceAst::find_class(std::string_view name) const {
  for (const auto& c : classes)
    if (c.name == name) return &c;
  return nullptr;
}

const MethodDecl* SourceAst::resolve_method(const std::string& cls, const std::string& method) const {
  std::set<std::string> seen;
  for (const ClassDecl* c = find_class(cls); c && seen.insert(c->name).second;
       c = c->super ? find_class(*c->super) : nullptr)
    for (const auto& m : c->methods)
      if (m.name == method) return &m;
  return nullptr;
}

namespace {

Term void_type() { return Term::atom("void"); }

class Checker {
 public:
  Checker(SourceAst& ast, std::vector<Diagnostic>& diags) : ast_(ast), diags_(diags) {}

  void run() {
    classes();
    if (has_errors(diags_)) return;
    for (auto& c : ast_.classes)
      for (auto& m : c.methods) method(c, m);
  }

 private:
  void error(SourcePos pos, std::string msg) { diags_.push_back({Diagnostic::Severity::Error, pos, std::move(msg)}); }

  bool valid_type(const Term& t) const {
    if (t.is_compound("array", 1)) return valid_type(t.arg(0));
    if (t.is_atom("int") || t.is_atom("bool")) return true;
    return t.is_atom() && ast_.find_class(t.name());
  }

  void classes() {
    ClassTable& ct = ast_.table;
    std::set<std::string> names;
    for (const auto& c : ast_.classes) {
      if (!names.insert(c.name).second) error(c.pos, "duplicate class " + c.name);
      if (ClassTable().has(c.name)) error(c.pos, "class name " + c.name + " is reserved");
    }
    for (const auto& c : ast_.classes) {
      if (c.super && !ast_.find_class(*c.super)) error(c.pos, "class " + c.name + " extends unknown class " + *c.super);
      ClassInfo info{c.name, c.super, {}};
      for (const auto& f : c.fields) {
        if (!valid_type(f.type)) error(f.pos, "unknown type " + type_to_string(f.type) + " for field " + f.name);
        info.fields.push_back({f.name, f.type});
      }
      ct.add(info);
    }
    if (has_errors(diags_)) return;
    if (auto cyc = ct.find_cycle()) {
      error(ast_.find_class(*cyc)->pos, "superclass cycle through " + *cyc);
      return;
    }
    for (const auto& c : ast_.classes) {
      std::set<std::string> fields;
      for (const auto& f : c.fields) {
        if (!fields.insert(f.name).second) error(f.pos, "duplicate field " + c.name + "." + f.name);
        if (c.super && ct.lookup_field(*c.super, f.name))
          error(f.pos, "field " + c.name + "." + f.name + " hides an inherited field");
      }
      std::set<std::string> methods;
      for (const auto& m : c.methods) {
        if (!methods.insert(m.name).second) error(m.pos, "duplicate method " + c.name + "." + m.name);
        if (m.ret && !valid_type(*m.ret)) error(m.pos, "unknown return type " + type_to_string(*m.ret));
        std::set<std::string> pnames;
        for (const auto& [pn, pt] : m.params) {
          if (!valid_type(pt)) error(m.pos, "unknown type " + type_to_string(pt) + " for parameter " + pn);
          if (!pnames.insert(pn).second || pn == "this") error(m.pos, "duplicate parameter " + pn);
        }
        if (c.super)
          if (const MethodDecl* o = ast_.resolve_method(*c.super, m.name)) {
            bool same = o->params.size() == m.params.size() && o->ret.has_value() == m.ret.has_value() &&
                        (!m.ret || o->ret->identical(*m.ret));
            for (std::size_t i = 0; same && i < m.params.size(); ++i)
              same = o->params[i].second.identical(m.params[i].second);
            if (!same) error(m.pos, "method " + c.name + "." + m.name + " overrides with a different signature");
          }
      }
    }
  }

  bool assignable(const Term& from, const Term& to) const {
    if (from.identical(to)) return true;
    if (from.is_atom("$null")) return is_ref_type(to);
    if (from.is_atom() && to.is_atom() && is_ref_type(from) && is_ref_type(to))
      return ast_.table.is_subclass(from.name(), to.name());
    return false;
  }

  void method(ClassDecl& c, MethodDecl& m) {
    cur_ = &m;
    cls_ = &c;
    m.local_names = {"this"};
    m.local_types = {Term::atom(c.name)};
    for (const auto& [pn, pt] : m.params) {
      m.local_names.push_back(pn);
      m.local_types.push_back(pt);
    }
    declared_.clear();
    for (std::size_t i = 0; i < m.local_names.size(); ++i) declared_.insert(static_cast<int>(i));
    if (!m.body) return;
    stmt(*m.body);
    if (m.ret && !always_returns(*m.body)) error(m.pos, "missing return in " + m.pred());
  }

  static bool always_returns(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Return: return true;
      case Stmt::Kind::Block:
        for (const auto& b : s.body)
          if (always_returns(*b)) return true;
        return false;
      case Stmt::Kind::If: return s.else_s && always_returns(*s.then_s) && always_returns(*s.else_s);
      default: return false;
    }
  }

  int find_local(const std::string& name) const {
    for (std::size_t i = 0; i < cur_->local_names.size(); ++i)
      if (cur_->local_names[i] == name && declared_.count(static_cast<int>(i))) return static_cast<int>(i);
    return -1;
  }

  void stmt(Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Block:
        for (auto& b : s.body) stmt(*b);
        return;
      case Stmt::Kind::Decl: {
        if (!valid_type(s.type)) error(s.pos, "unknown type " + type_to_string(s.type));
        if (s.expr) expect_value(*s.expr, s.type, "initializer of " + s.name);
        int slot = -1;
        for (std::size_t i = 0; i < cur_->local_names.size(); ++i)
          if (cur_->local_names[i] == s.name) slot = static_cast<int>(i);
        if (slot >= 0 && slot <= static_cast<int>(cur_->params.size())) {
          error(s.pos, "local " + s.name + " redeclares a parameter");
        } else if (slot >= 0 && !cur_->local_types[slot].identical(s.type)) {
          error(s.pos, "local " + s.name + " redeclared with a different type");
        } else if (slot < 0) {
          slot = static_cast<int>(cur_->local_names.size());
          cur_->local_names.push_back(s.name);
          cur_->local_types.push_back(s.type);
        }
        s.slot = slot;
        declared_.insert(slot);
        return;
      }
      case Stmt::Kind::Assign: {
        Term t = value(*s.lhs);
        if (s.lhs->kind == Expr::Kind::Length) error(s.pos, "cannot assign to length");
        if (s.lhs->kind == Expr::Kind::This) error(s.pos, "cannot assign to this");
        if (!t.is_atom("$error")) expect_value(*s.expr, t, "assignment");
        return;
      }
      case Stmt::Kind::If:
        condition(*s.expr);
        stmt(*s.then_s);
        if (s.else_s) stmt(*s.else_s);
        return;
      case Stmt::Kind::While:
        condition(*s.expr);
        stmt(*s.loop_body);
        return;
      case Stmt::Kind::Return:
        if (!cur_->ret) {
          if (s.expr) error(s.pos, "void method " + cur_->pred() + " returns a value");
        } else if (!s.expr) {
          error(s.pos, "missing return value in " + cur_->pred());
        } else {
          expect_value(*s.expr, *cur_->ret, "return value");
        }
        return;
      case Stmt::Kind::Expr:
        typed(*s.expr, true);
        return;
    }
  }

  void expect_value(Expr& e, const Term& want, const std::string& what) {
    Term t = value(e);
    if (t.is_atom("$error")) return;
    if (!assignable(t, want))
      error(e.pos, "type mismatch in " + what + ": expected " + type_to_string(want) + ", found " +
                       (t.is_atom("$null") ? std::string("null") : type_to_string(t)));
  }

  // A value expression: no comparisons or logical operators.
  Term value(Expr& e) {
    Term t = typed(e, false);
    if (t.is_atom("void")) {
      error(e.pos, "void call used as a value");
      return Term::atom("$error");
    }
    return t;
  }

  static bool is_cond_op(const std::string& op) {
    return op == "&&" || op == "||" || op == "!" || op == "<" || op == "<=" || op == ">" || op == ">=" ||
           op == "==" || op == "!=";
  }

  void condition(Expr& e) {
    if ((e.kind == Expr::Kind::Binary || e.kind == Expr::Kind::Unary) && is_cond_op(e.op)) {
      if (e.op == "&&" || e.op == "||") {
        condition(*e.kids[0]);
        condition(*e.kids[1]);
      } else if (e.op == "!") {
        condition(*e.kids[0]);
      } else {
        Term l = value(*e.kids[0]), r = value(*e.kids[1]);
        if (l.is_atom("$error") || r.is_atom("$error")) {
        } else if (e.op == "==" || e.op == "!=") {
          bool ok = (l.is_atom("int") && r.is_atom("int")) || (l.is_atom("bool") && r.is_atom("bool")) ||
                    ((is_ref_type(l) || l.is_atom("$null")) && (is_ref_type(r) || r.is_atom("$null")) &&
                     (assignable(l, r) || assignable(r, l)));
          if (!ok) error(e.pos, "incomparable operands of " + e.op);
        } else if (!l.is_atom("int") || !r.is_atom("int")) {
          error(e.pos, "operands of " + e.op + " must be int");
        }
      }
      e.type = Term::atom("bool");
      return;
    }
    Term t = value(e);
    if (!t.is_atom("$error") && !t.is_atom("bool")) error(e.pos, "condition must be bool");
  }

  Term typed(Expr& e, bool statement) {
    Term t = compute(e, statement);
    e.type = t;
    return t;
  }

  Term compute(Expr& e, bool statement) {
    const Term err = Term::atom("$error");
    switch (e.kind) {
      case Expr::Kind::IntLit: return Term::atom("int");
      case Expr::Kind::BoolLit: return Term::atom("bool");
      case Expr::Kind::Null: return null_type();
      case Expr::Kind::This: return Term::atom(cls_->name);
      case Expr::Kind::Name: {
        int slot = find_local(e.name);
        if (slot >= 0) {
          e.slot = slot;
          return cur_->local_types[slot];
        }
        if (ast_.table.lookup_field(cls_->name, e.name)) {
          auto self = std::make_unique<Expr>();
          self->kind = Expr::Kind::This;
          self->pos = e.pos;
          e.kind = Expr::Kind::Field;
          e.kids.push_back(std::move(self));
          return compute(e, statement);
        }
        error(e.pos, "undeclared name " + e.name);
        return err;
      }
      case Expr::Kind::Field: {
        Term ot = value(*e.kids[0]);
        if (ot.is_atom("$error")) return err;
        if (ot.is_compound("array", 1) && e.name == "length") {
          e.kind = Expr::Kind::Length;
          return Term::atom("int");
        }
        if (!ot.is_atom() || !is_ref_type(ot) || !ast_.find_class(ot.name())) {
          error(e.pos, "field access on a value of type " + type_to_string(ot));
          return err;
        }
        for (const ClassDecl* c = ast_.find_class(ot.name()); c; c = c->super ? ast_.find_class(*c->super) : nullptr)
          for (const auto& f : c->fields)
            if (f.name == e.name) {
              e.decl_class = c->name;
              return f.type;
            }
        error(e.pos, "class " + ot.name() + " has no field " + e.name);
        return err;
      }
      case Expr::Kind::Length: return Term::atom("int");
      case Expr::Kind::Index: {
        Term at = value(*e.kids[0]);
        Term it = value(*e.kids[1]);
        if (!it.is_atom("$error") && !it.is_atom("int")) error(e.kids[1]->pos, "array index must be int");
        if (at.is_atom("$error")) return err;
        if (!at.is_compound("array", 1)) {
          error(e.pos, "indexing a value of type " + type_to_string(at));
          return err;
        }
        return at.arg(0);
      }
      case Expr::Kind::Call: {
        if (!e.kids[0]) {
          e.kids[0] = std::make_unique<Expr>();
          e.kids[0]->kind = Expr::Kind::This;
          e.kids[0]->pos = e.pos;
        }
        Term rt = value(*e.kids[0]);
        for (std::size_t i = 1; i < e.kids.size(); ++i) value(*e.kids[i]);
        if (rt.is_atom("$error")) return err;
        if (!rt.is_atom() || !ast_.find_class(rt.name())) {
          error(e.pos, "method call on a value of type " + type_to_string(rt));
          return err;
        }
        const MethodDecl* m = ast_.resolve_method(rt.name(), e.name);
        if (!m) {
          error(e.pos, "class " + rt.name() + " has no method " + e.name);
          return err;
        }
        e.decl_class = rt.name();
        if (m->params.size() != e.kids.size() - 1) {
          error(e.pos, "wrong number of arguments to " + e.name);
          return err;
        }
        for (std::size_t i = 1; i < e.kids.size(); ++i) {
          Term at = e.kids[i]->type;
          if (!at.is_atom("$error") && !assignable(at, m->params[i - 1].second))
            error(e.kids[i]->pos, "argument " + std::to_string(i) + " of " + e.name + " has type " +
                                      type_to_string(at) + ", expected " + type_to_string(m->params[i - 1].second));
        }
        return m->ret ? *m->ret : void_type();
      }
      case Expr::Kind::New:
        if (!ast_.find_class(e.name)) {
          error(e.pos, "unknown class " + e.name);
          return err;
        }
        return Term::atom(e.name);
      case Expr::Kind::NewArray: {
        Term lt = value(*e.kids[0]);
        if (!lt.is_atom("$error") && !lt.is_atom("int")) error(e.pos, "array length must be int");
        if (!valid_type(e.elem_type)) {
          error(e.pos, "unknown element type " + type_to_string(e.elem_type));
          return err;
        }
        return Term::compound("array", {e.elem_type});
      }
      case Expr::Kind::Unary:
        if (e.op == "!") {
          error(e.pos, "'!' is only allowed in a condition");
          return err;
        } else {
          Term t = value(*e.kids[0]);
          if (!t.is_atom("$error") && !t.is_atom("int")) error(e.pos, "operand of unary - must be int");
          return Term::atom("int");
        }
      case Expr::Kind::Binary: {
        if (is_cond_op(e.op)) {
          error(e.pos, "'" + e.op + "' is only allowed in a condition");
          return err;
        }
        Term l = value(*e.kids[0]), r = value(*e.kids[1]);
        if ((!l.is_atom("$error") && !l.is_atom("int")) || (!r.is_atom("$error") && !r.is_atom("int")))
          error(e.pos, "operands of " + e.op + " must be int");
        return Term::atom("int");
      }
    }
    return err;
  }

  SourceAst& ast_;
  std::vector<Diagnostic>& diags_;
  MethodDecl* cur_ = nullptr;
  ClassDecl* cls_ = nullptr;
  std::set<int> declared_;
};

}  // namespace

void check(SourceAst& ast, std::vector<Diagnostic>& diags) { Checker(ast, diags).run(); }

}  // namespace tcg::moo
