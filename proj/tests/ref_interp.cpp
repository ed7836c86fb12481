#include "ref_interp.hpp"

#include <stdexcept>

namespace refi {

using tcg::Term;
using tcg::TermKind;
using namespace tcg::moo;

namespace {

struct Throw {
  std::int64_t ref;
};
struct Abort {};

Term zero(const Term& type) { return type.is_atom("int") || type.is_atom("bool") ? Term::integer(0) : Term::null(); }

bool is_null(const Term& v) { return v.kind() == TermKind::Null; }
std::int64_t key(const Term& v) { return v.arg(0).int_value(); }

class Interp {
 public:
  Interp(const SourceAst& ast, Heap heap, long limit) : ast_(ast), heap_(std::move(heap)), limit_(limit) {}

  Outcome top(const MethodDecl& m, const std::vector<Term>& args) {
    Outcome out;
    try {
      out.ret = invoke(m, args);
      if (!m.ret) out.ret.reset();
    } catch (const Throw& t) {
      out.exc = heap_.at(t.ref).cls;
      out.exc_ref = t.ref;
    } catch (const Abort&) {
      out.aborted = true;
    }
    out.heap = std::move(heap_);
    return out;
  }

 private:
  struct Frame {
    std::vector<Term> locals;
    std::optional<Term> ret;
    bool done = false;
  };

  void tick() {
    if (++steps_ > limit_) throw Abort{};
  }

  std::int64_t alloc(Cell c) {
    std::int64_t r = counter_;
    while (heap_.count(r)) ++r;
    counter_ = r + 1;
    heap_[r] = std::move(c);
    return r;
  }

  [[noreturn]] void raise(const std::string& cls) {
    Cell c;
    c.cls = cls;
    throw Throw{alloc(c)};
  }

  Cell& deref_nonnull(const Term& v) {
    if (is_null(v)) raise("NPE");
    return heap_.at(key(v));
  }

  std::optional<Term> invoke(const MethodDecl& m, const std::vector<Term>& args) {
    tick();
    if (depth_ > 2000) throw Abort{};
    ++depth_;
    Frame f;
    f.locals.resize(m.local_names.size());
    for (std::size_t i = 0; i < f.locals.size(); ++i) f.locals[i] = zero(m.local_types[i]);
    for (std::size_t i = 0; i < args.size(); ++i) f.locals[i] = args[i];
    exec(*m.body, f);
    --depth_;
    return f.ret;
  }

  void exec(const Stmt& s, Frame& f) {
    if (f.done) return;
    switch (s.kind) {
      case Stmt::Kind::Block:
        for (const auto& b : s.body) {
          exec(*b, f);
          if (f.done) return;
        }
        return;
      case Stmt::Kind::Decl:
        f.locals[s.slot] = s.expr ? eval(*s.expr, f) : zero(s.type);
        return;
      case Stmt::Kind::Assign: {
        const Expr& l = *s.lhs;
        if (l.kind == Expr::Kind::Name) {
          f.locals[l.slot] = eval(*s.expr, f);
        } else if (l.kind == Expr::Kind::Field) {
          Term o = eval(*l.kids[0], f);
          if (is_null(o)) raise("NPE");
          Term v = eval(*s.expr, f);
          for (auto& [n, fv] : heap_.at(key(o)).fields)
            if (n == l.name) fv = v;
        } else {
          Term a = eval(*l.kids[0], f);
          if (is_null(a)) raise("NPE");
          std::int64_t i = eval(*l.kids[1], f).int_value();
          std::int64_t len = static_cast<std::int64_t>(heap_.at(key(a)).elems.size());
          if (i < 0 || i >= len) raise("OOB");
          Term v = eval(*s.expr, f);
          heap_.at(key(a)).elems[static_cast<std::size_t>(i)] = v;
        }
        return;
      }
      case Stmt::Kind::If:
        if (cond(*s.expr, f)) exec(*s.then_s, f);
        else if (s.else_s) exec(*s.else_s, f);
        return;
      case Stmt::Kind::While:
        while (!f.done && cond(*s.expr, f)) {
          tick();
          exec(*s.loop_body, f);
        }
        return;
      case Stmt::Kind::Return:
        if (s.expr) f.ret = eval(*s.expr, f);
        f.done = true;
        return;
      case Stmt::Kind::Expr:
        eval(*s.expr, f);
        return;
    }
  }

  bool cond(const Expr& e, Frame& f) {
    if (e.kind == Expr::Kind::Binary) {
      if (e.op == "&&") return cond(*e.kids[0], f) && cond(*e.kids[1], f);
      if (e.op == "||") return cond(*e.kids[0], f) || cond(*e.kids[1], f);
      static const char* rels[] = {"==", "!=", "<", "<=", ">", ">="};
      for (const char* r : rels)
        if (e.op == r) {
          Term a = eval(*e.kids[0], f);
          Term b = eval(*e.kids[1], f);
          if (!a.is_int() || !b.is_int()) {
            bool same = is_null(a) ? is_null(b) : !is_null(b) && key(a) == key(b);
            return e.op == "==" ? same : !same;
          }
          std::int64_t x = a.int_value(), y = b.int_value();
          if (e.op == "==") return x == y;
          if (e.op == "!=") return x != y;
          if (e.op == "<") return x < y;
          if (e.op == "<=") return x <= y;
          if (e.op == ">") return x > y;
          return x >= y;
        }
    }
    if (e.kind == Expr::Kind::Unary && e.op == "!") return !cond(*e.kids[0], f);
    return eval(e, f).int_value() != 0;
  }

  Term eval(const Expr& e, Frame& f) {
    switch (e.kind) {
      case Expr::Kind::IntLit:
      case Expr::Kind::BoolLit: return Term::integer(e.value);
      case Expr::Kind::Null: return Term::null();
      case Expr::Kind::This: return f.locals[0];
      case Expr::Kind::Name: return f.locals[e.slot];
      case Expr::Kind::Field: {
        Cell& c = deref_nonnull(eval(*e.kids[0], f));
        for (const auto& [n, v] : c.fields)
          if (n == e.name) return v;
        throw std::logic_error("no field " + e.name);
      }
      case Expr::Kind::Length:
        return Term::integer(static_cast<std::int64_t>(deref_nonnull(eval(*e.kids[0], f)).elems.size()));
      case Expr::Kind::Index: {
        Term a = eval(*e.kids[0], f);
        if (is_null(a)) raise("NPE");
        std::int64_t i = eval(*e.kids[1], f).int_value();
        const auto& el = heap_.at(key(a)).elems;
        if (i < 0 || i >= static_cast<std::int64_t>(el.size())) raise("OOB");
        return el[static_cast<std::size_t>(i)];
      }
      case Expr::Kind::Call: {
        Term recv = e.kids[0] ? eval(*e.kids[0], f) : f.locals[0];
        if (is_null(recv)) raise("NPE");
        std::vector<Term> args{recv};
        for (std::size_t i = 1; i < e.kids.size(); ++i) args.push_back(eval(*e.kids[i], f));
        const MethodDecl* impl = ast_.resolve_method(heap_.at(key(recv)).cls, e.name);
        if (!impl || !impl->body) throw std::logic_error("no body for " + e.name);
        auto r = invoke(*impl, args);
        return r ? *r : Term::integer(0);
      }
      case Expr::Kind::New: {
        Cell c;
        c.cls = e.name;
        for (const auto& fd : ast_.table.all_fields(e.name)) c.fields.emplace_back(fd.name, zero(fd.type));
        return Term::ref(Term::integer(alloc(std::move(c))));
      }
      case Expr::Kind::NewArray: {
        std::int64_t n = eval(*e.kids[0], f).int_value();
        if (n < 0) raise("OOB");
        Cell c;
        c.is_array = true;
        c.elem_type = e.elem_type;
        c.elems.assign(static_cast<std::size_t>(n), zero(e.elem_type));
        return Term::ref(Term::integer(alloc(std::move(c))));
      }
      case Expr::Kind::Unary:
        if (e.op == "-") return Term::integer(-eval(*e.kids[0], f).int_value());
        return Term::integer(cond(e, f) ? 1 : 0);
      case Expr::Kind::Binary: {
        if (e.op != "+" && e.op != "-" && e.op != "*" && e.op != "/" && e.op != "%")
          return Term::integer(cond(e, f) ? 1 : 0);
        std::int64_t x = eval(*e.kids[0], f).int_value();
        std::int64_t y = eval(*e.kids[1], f).int_value();
        if (e.op == "+") return Term::integer(x + y);
        if (e.op == "-") return Term::integer(x - y);
        if (e.op == "*") return Term::integer(x * y);
        if (y == 0) raise("ARITH");
        return Term::integer(e.op == "/" ? x / y : x % y);
      }
    }
    throw std::logic_error("bad expression");
  }

  const SourceAst& ast_;
  Heap heap_;
  long limit_;
  long steps_ = 0;
  int depth_ = 0;
  std::int64_t counter_ = 0;
};

class Gen {
 public:
  Gen(const SourceAst& ast, std::mt19937& rng) : ast_(ast), rng_(rng) {}

  Term value(const Term& type, int depth) {
    if (type.is_atom("int")) return Term::integer(pick(-8, 8));
    if (type.is_atom("bool")) return Term::integer(pick(0, 1));
    if (pick(0, 99) < 20 || depth > 3) return Term::null();
    std::vector<std::int64_t> compatible;
    for (const auto& [k, c] : heap_)
      if (fits(c, type)) compatible.push_back(k);
    if (!compatible.empty() && pick(0, 99) < 35)
      return Term::ref(Term::integer(compatible[static_cast<std::size_t>(pick(0, static_cast<int>(compatible.size()) - 1))]));
    return fresh(type, depth);
  }

  Term fresh(const Term& type, int depth) {
    std::int64_t k = next_++;
    Cell& c = heap_[k];
    if (type.is_compound("array", 1)) {
      c.is_array = true;
      c.elem_type = type.arg(0);
      int n = pick(0, 4);
      for (int i = 0; i < n; ++i) {
        Term v = value(type.arg(0), depth + 1);
        heap_[k].elems.push_back(v);
      }
    } else {
      auto subs = ast_.table.subclasses_of(type.name());
      std::string cls = subs[static_cast<std::size_t>(pick(0, static_cast<int>(subs.size()) - 1))];
      c.cls = cls;
      for (const auto& fd : ast_.table.all_fields(cls)) {
        Term v = value(fd.type, depth + 1);
        heap_[k].fields.emplace_back(fd.name, v);
      }
    }
    return Term::ref(Term::integer(k));
  }

  Heap take() { return std::move(heap_); }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  bool fits(const Cell& c, const Term& type) const {
    if (type.is_compound("array", 1)) return c.is_array && tcg::to_string(c.elem_type) == tcg::to_string(type.arg(0));
    return !c.is_array && ast_.table.is_subclass(c.cls, type.name());
  }

  const SourceAst& ast_;
  std::mt19937& rng_;
  Heap heap_;
  std::int64_t next_ = 0;
};

}  // namespace

Outcome run(const SourceAst& ast, const MethodDecl& method, const std::vector<Term>& args, Heap heap, long step_limit) {
  return Interp(ast, std::move(heap), step_limit).top(method, args);
}

Input random_input(const SourceAst& ast, const MethodDecl& method, std::mt19937& rng) {
  Gen g(ast, rng);
  Input in;
  in.args.push_back(g.fresh(Term::atom(method.cls), 0));
  for (const auto& [name, type] : method.params) in.args.push_back(g.value(type, 0));
  in.heap = g.take();
  return in;
}

Term heap_term(const Heap& h) {
  std::vector<Term> locs;
  for (const auto& [k, c] : h) {
    Term cell;
    if (c.is_array) {
      cell = Term::compound("array", {c.elem_type, Term::integer(static_cast<std::int64_t>(c.elems.size())),
                                      Term::list(c.elems)});
    } else {
      std::vector<Term> fs;
      for (const auto& [n, v] : c.fields) fs.push_back(Term::compound("field", {Term::atom(n), v}));
      cell = Term::compound("object", {Term::atom(c.cls), Term::list(fs)});
    }
    locs.push_back(Term::compound(",", {Term::integer(k), cell}));
  }
  return Term::list(locs);
}

}  // namespace refi
