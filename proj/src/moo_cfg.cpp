#include <functional>
#include <stdexcept>

#include "moo_internal.hpp"

namespace tcg::moo {

namespace {

Term key_of(int slot) { return Term::compound("$key", {Term::var(static_cast<VarId>(slot))}); }
Term slot_term(int slot) { return Term::var(static_cast<VarId>(slot)); }
bool is_slot(const Term& t) { return t.is_var(); }
int slot_of(const Term& t) { return static_cast<int>(t.var_id()); }

struct Namer {
  std::map<std::string, int> counts;
  std::string numbered(const std::string& base) { return base + std::to_string(++counts[base]); }
  std::string plain(const std::string& base) {
    int n = ++counts[base];
    return n == 1 ? base : base + std::to_string(n);
  }
};

struct Kont;
using KontPtr = std::shared_ptr<Kont>;

struct Kont {
  enum class Kind { Ret, Block, Loop, Seq, Cond, Shared };
  Kind kind = Kind::Ret;
  int block = -1;
  const Stmt* loop = nullptr;
  const std::vector<StmtPtr>* list = nullptr;
  std::size_t idx = 0;
  const Expr* cond = nullptr;
  KontPtr on_true, on_false;
  std::string base;
  KontPtr next;
  std::shared_ptr<std::optional<std::optional<int>>> shared;  // memoized target of a Shared kont

  static KontPtr ret() { return std::make_shared<Kont>(); }
  static KontPtr seq(const std::vector<StmtPtr>* l, std::size_t i, KontPtr n) {
    auto k = std::make_shared<Kont>();
    k->kind = Kind::Seq;
    k->list = l;
    k->idx = i;
    k->next = std::move(n);
    return k;
  }
  static KontPtr loop_to(const Stmt* w, KontPtr exit) {
    auto k = std::make_shared<Kont>();
    k->kind = Kind::Loop;
    k->loop = w;
    k->next = std::move(exit);
    return k;
  }
  static KontPtr cond_k(const Expr* c, KontPtr t, KontPtr f, std::string base) {
    auto k = std::make_shared<Kont>();
    k->kind = Kind::Cond;
    k->cond = c;
    k->on_true = std::move(t);
    k->on_false = std::move(f);
    k->base = std::move(base);
    return k;
  }
  static KontPtr share(KontPtr inner) {
    if (inner->kind == Kind::Shared || inner->kind == Kind::Ret || inner->kind == Kind::Block) return inner;
    auto k = std::make_shared<Kont>();
    k->kind = Kind::Shared;
    k->next = std::move(inner);
    k->shared = std::make_shared<std::optional<std::optional<int>>>();
    return k;
  }
};

struct Cursor {
  int block = 0;
  int arm = 0;
  std::set<int> rform;  // slots whose current value is r(K) in this arm
};

class MethodBuilder {
 public:
  MethodBuilder(const SourceAst& ast, const MethodDecl& m, Namer& namer, MethodCfg& out)
      : ast_(ast), m_(m), namer_(namer), cfg_(out), nulls_(m) {
    cfg_.method = &m;
    cfg_.slot_names = m.local_names;
    cfg_.slot_types = m.local_types;
    mark_loops(m.body->body, false);
  }

  void run() {
    int entry = new_block(m_.pred(), "entry", {0});
    Cursor c{entry, 0, {0}};
    lower(c, Kont::seq(&m_.body->body, 0, Kont::ret()));
  }

 private:
  using EK = std::function<void(Cursor&, Term)>;

  void mark_loops(const std::vector<StmtPtr>& list, bool in_loop) {
    if (in_loop) loop_lists_.insert(&list);
    for (const auto& s : list) {
      if (s->kind == Stmt::Kind::Block) mark_loops(s->body, in_loop);
      if (s->kind == Stmt::Kind::If) {
        mark_loops(s->then_s->body, in_loop);
        if (s->else_s) mark_loops(s->else_s->body, in_loop);
      }
      if (s->kind == Stmt::Kind::While) mark_loops(s->loop_body->body, true);
    }
  }

  Arm& arm(const Cursor& c) { return cfg_.blocks[c.block].arms[c.arm]; }

  int new_block(std::string name, std::string kind, std::set<int> rform, std::size_t arms = 1) {
    Block b;
    b.name = std::move(name);
    b.kind = std::move(kind);
    b.ref_slots.assign(rform.begin(), rform.end());
    b.arms.resize(arms);
    cfg_.blocks.push_back(std::move(b));
    return static_cast<int>(cfg_.blocks.size()) - 1;
  }

  int temp(const Term& type, const std::string& name) {
    cfg_.slot_names.push_back("$" + name);
    cfg_.slot_types.push_back(type);
    return static_cast<int>(cfg_.slot_names.size()) - 1;
  }

  void emit(Cursor& c, Instr i) { arm(c).instrs.push_back(std::move(i)); }

  void jump(Cursor& c, int target) {
    arm(c).term.kind = Terminator::Kind::Goto;
    arm(c).term.target = target;
  }

  void throw_exc(Cursor& c, const std::string& cls) {
    arm(c).term.kind = Terminator::Kind::Throw;
    arm(c).term.cls = cls;
  }

  std::set<int> known_nonnull(const NullFacts& f) const {
    std::set<int> out{0};
    for (std::size_t s = 1; s < m_.local_types.size(); ++s)
      if (is_ref_type(m_.local_types[s]) && f.of(static_cast<int>(s)) == Nullness::NonNull)
        out.insert(static_cast<int>(s));
    return out;
  }

  // ---- continuations ----

  void lower(Cursor c, const KontPtr& k) {
    switch (k->kind) {
      case Kont::Kind::Ret:
        arm(c).term.kind = Terminator::Kind::Return;
        if (m_.ret) arm(c).term.value = is_ref_type(*m_.ret) ? Term::null() : Term::integer(0);
        return;
      case Kont::Kind::Block: jump(c, k->block); return;
      case Kont::Kind::Loop: jump(c, loop_header(k->loop, k->next)); return;
      case Kont::Kind::Seq:
        if (k->idx == k->list->size()) return lower(c, k->next);
        return stmt(c, *(*k->list)[k->idx], Kont::seq(k->list, k->idx + 1, k->next));
      case Kont::Kind::Cond: return lower_cond(c, *k->cond, k->on_true, k->on_false, k->base, std::nullopt);
      case Kont::Kind::Shared: {
        auto t = target(k);
        if (t) return jump(c, *t);
        return lower(c, Kont::ret());
      }
    }
  }

  // Block a continuation starts at; nullopt when it is the plain method exit.
  std::optional<int> target(const KontPtr& k) {
    switch (k->kind) {
      case Kont::Kind::Ret: return std::nullopt;
      case Kont::Kind::Block: return k->block;
      case Kont::Kind::Loop: return loop_header(k->loop, k->next);
      case Kont::Kind::Shared:
        if (!k->shared->has_value()) *k->shared = target(k->next);
        return **k->shared;
      case Kont::Kind::Cond: throw std::logic_error("condition continuation cannot be shared");
      case Kont::Kind::Seq: break;
    }
    if (k->idx == k->list->size()) return target(k->next);
    const Stmt* s = (*k->list)[k->idx].get();
    auto rest = Kont::seq(k->list, k->idx + 1, k->next);
    if (s->kind == Stmt::Kind::While) return loop_header(s, rest);
    if (s->kind == Stmt::Kind::If && pure_cond(*s->expr)) {
      if (auto it = if_blocks_.find(s); it != if_blocks_.end()) return it->second;
      int b = new_block(namer_.numbered("if"), "if", known_nonnull(nulls_.before(s)), 0);
      if_blocks_[s] = b;
      lower_cond_into(b, *s->expr, Kont::seq(&s->then_s->body, 0, Kont::share(rest)),
                      s->else_s ? Kont::seq(&s->else_s->body, 0, Kont::share(rest)) : Kont::share(rest));
      return b;
    }
    auto key = std::make_pair(k->list, k->idx);
    if (auto it = join_blocks_.find(key); it != join_blocks_.end()) return it->second;
    std::string base = "join", kind = "join";
    bool preloop = false;
    for (std::size_t j = k->idx; j < k->list->size(); ++j) {
      auto kd = (*k->list)[j]->kind;
      if (kd == Stmt::Kind::While) preloop = true;
      if (kd != Stmt::Kind::Decl && kd != Stmt::Kind::Assign && kd != Stmt::Kind::Expr) break;
    }
    std::string name;
    if (preloop)
      name = namer_.plain(kind = "preloop");
    else if (loop_lists_.count(k->list))
      name = namer_.numbered(kind = "loopbody");
    else
      name = namer_.numbered(kind);
    std::set<int> rf = known_nonnull(nulls_.before(s));
    int b = new_block(name, kind, rf);
    join_blocks_[key] = b;
    lower(Cursor{b, 0, rf}, k);
    return b;
  }

  int loop_header(const Stmt* w, const KontPtr& exit) {
    if (auto it = loop_blocks_.find(w); it != loop_blocks_.end()) return it->second;
    std::set<int> rf = known_nonnull(nulls_.header(w));
    int b = new_block(namer_.plain("loop"), "loop", rf);
    loop_blocks_[w] = b;
    auto body = Kont::share(Kont::seq(&w->loop_body->body, 0, Kont::loop_to(w, exit)));
    lower_cond(Cursor{b, 0, rf}, *w->expr, body, exit, "loopcond", std::nullopt);
    return b;
  }

  // ---- statements ----

  void stmt(Cursor c, const Stmt& s, const KontPtr& k) {
    switch (s.kind) {
      case Stmt::Kind::Block: return lower(c, Kont::seq(&s.body, 0, k));
      case Stmt::Kind::Decl:
        if (!s.expr) {
          assign(c, s.slot, is_ref_type(s.type) ? Term::null() : Term::integer(0));
          return lower(c, k);
        }
        return eval(c, *s.expr, [this, slot = s.slot, k](Cursor& c2, Term v) {
          assign(c2, slot, v);
          lower(c2, k);
        }, s.slot);
      case Stmt::Kind::Assign: {
        const Expr& lhs = *s.lhs;
        if (lhs.kind == Expr::Kind::Name)
          return eval(c, *s.expr, [this, slot = lhs.slot, k](Cursor& c2, Term v) {
            assign(c2, slot, v);
            lower(c2, k);
          }, lhs.slot);
        if (lhs.kind == Expr::Kind::Field)
          return eval_ref(c, *lhs.kids[0], [this, &lhs, &s, k](Cursor& c2, int obj) {
            eval(c2, *s.expr, [this, &lhs, obj, k](Cursor& c3, Term v) {
              Instr i;
              i.op = Instr::Op::SetField;
              i.a = key_of(obj);
              i.name = lhs.decl_class;
              i.b = Term::atom(lhs.name);
              i.c = simple(c3, v, lhs.type, "v");
              emit(c3, i);
              lower(c3, k);
            });
          });
        return eval_ref(c, *lhs.kids[0], [this, &lhs, &s, k](Cursor& c2, int arr) {
          eval(c2, *lhs.kids[1], [this, &s, arr, k](Cursor& c3, Term idx) {
            Term ix = simple(c3, idx, Term::atom("int"), "i");
            bounds_check(c3, arr, ix, [this, &s, arr, ix, k](Cursor& c4) {
              eval(c4, *s.expr, [this, &s, arr, ix, k](Cursor& c5, Term v) {
                Instr i;
                i.op = Instr::Op::SetArray;
                i.a = key_of(arr);
                i.b = ix;
                i.c = simple(c5, v, s.lhs->type, "v");
                emit(c5, i);
                lower(c5, k);
              });
            });
          });
        });
      }
      case Stmt::Kind::If: {
        auto join = Kont::share(k);
        auto then_k = Kont::seq(&s.then_s->body, 0, join);
        auto else_k = s.else_s ? Kont::seq(&s.else_s->body, 0, join) : join;
        return lower_cond(c, *s.expr, then_k, else_k, "if", std::nullopt);
      }
      case Stmt::Kind::While: return lower(c, Kont::loop_to(&s, k));
      case Stmt::Kind::Return:
        if (!s.expr) {
          arm(c).term.kind = Terminator::Kind::Return;
          return;
        }
        return eval(c, *s.expr, [this](Cursor& c2, Term v) {
          Term val = simple(c2, v, *m_.ret, "r");
          arm(c2).term.kind = Terminator::Kind::Return;
          arm(c2).term.value = val;
        });
      case Stmt::Kind::Expr:
        return eval(c, *s.expr, [this, k](Cursor& c2, Term) { lower(c2, k); });
    }
  }

  void assign(Cursor& c, int slot, const Term& v) {
    if (is_slot(v) && slot_of(v) == slot) return;  // defined in place
    Instr i;
    i.dst = slot;
    i.a = v;
    if (is_slot(v)) {
      i.op = Instr::Op::Copy;
      bool rf = c.rform.count(slot_of(v)) > 0;
      c.rform.erase(slot);
      if (rf) c.rform.insert(slot);
    } else {
      i.op = v.is_int() || v.kind() == TermKind::Null ? Instr::Op::Const : Instr::Op::Assign;
      c.rform.erase(slot);
    }
    emit(c, i);
  }

  // Operand usable as a literal argument: a slot, an integer or null.
  Term simple(Cursor& c, const Term& v, const Term& type, const std::string& name) {
    if (is_slot(v) || v.is_int() || v.kind() == TermKind::Null) return v;
    int t = temp(type, name);
    Instr i;
    i.op = Instr::Op::Assign;
    i.dst = t;
    i.a = v;
    emit(c, i);
    return slot_term(t);
  }

  int def_slot(Cursor& c, int hint, const Term& type, const std::string& name, bool rform) {
    int d = hint >= 0 ? hint : temp(type, name);
    c.rform.erase(d);
    if (rform) c.rform.insert(d);
    return d;
  }

  // ---- expressions ----

  static bool pure(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::IntLit:
      case Expr::Kind::BoolLit:
      case Expr::Kind::Null:
      case Expr::Kind::This:
      case Expr::Kind::Name: return true;
      case Expr::Kind::Unary: return e.op == "-" && pure(*e.kids[0]);
      case Expr::Kind::Binary:
        return (e.op == "+" || e.op == "-" || e.op == "*") && pure(*e.kids[0]) && pure(*e.kids[1]);
      default: return false;
    }
  }

  static const Expr& first_atom(const Expr& c) {
    if (c.kind == Expr::Kind::Binary && (c.op == "&&" || c.op == "||")) return first_atom(*c.kids[0]);
    if (c.kind == Expr::Kind::Unary && c.op == "!") return first_atom(*c.kids[0]);
    return c;
  }

  static bool pure_cond(const Expr& c) {
    const Expr& a = first_atom(c);
    if (a.kind == Expr::Kind::Binary && a.kids.size() == 2 && a.op != "+" && a.op != "-" && a.op != "*" &&
        a.op != "/" && a.op != "%")
      return pure(*a.kids[0]) && pure(*a.kids[1]);
    return pure(a);
  }

  static Term pure_term(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::IntLit:
      case Expr::Kind::BoolLit: return Term::integer(e.value);
      case Expr::Kind::Null: return Term::null();
      case Expr::Kind::This: return slot_term(0);
      case Expr::Kind::Name: return slot_term(e.slot);
      case Expr::Kind::Unary: return Term::compound("-", {Term::integer(0), pure_term(*e.kids[0])});
      default: return Term::compound(e.op, {pure_term(*e.kids[0]), pure_term(*e.kids[1])});
    }
  }

  void eval_all(Cursor& c, const std::vector<const Expr*>& es, std::size_t i, std::vector<Term> acc,
                const std::function<void(Cursor&, std::vector<Term>)>& k) {
    if (i == es.size()) return k(c, std::move(acc));
    eval(c, *es[i], [this, &es, i, acc, k](Cursor& c2, Term v) mutable {
      acc.push_back(simple(c2, v, es[i]->type, "a"));
      eval_all(c2, es, i + 1, std::move(acc), k);
    });
  }

  // Evaluates a reference expression and ensures it is non-null.
  void eval_ref(Cursor& c, const Expr& e, const std::function<void(Cursor&, int)>& k) {
    eval(c, e, [this, k](Cursor& c2, Term v) { need_rform(c2, v, k); });
  }

  void need_rform(Cursor& c, const Term& v, const std::function<void(Cursor&, int)>& k) {
    if (v.kind() == TermKind::Null) return throw_exc(c, "NPE");
    int s = slot_of(v);
    if (c.rform.count(s)) return k(c, s);
    int b = new_block(namer_.numbered("nullcheck"), "nullcheck", c.rform, 2);
    jump(c, b);
    Block& blk = cfg_.blocks[b];
    blk.arms[0].patterns.push_back({s, Pattern::Kind::Ref});
    blk.arms[0].label = cfg_.slot_names[s] + " != null";
    blk.arms[1].patterns.push_back({s, Pattern::Kind::Null});
    blk.arms[1].label = cfg_.slot_names[s] + " == null";
    std::set<int> rf = c.rform;
    Cursor npe{b, 1, rf};
    rf.insert(s);
    Cursor ok{b, 0, rf};
    k(ok, s);
    throw_exc(npe, "NPE");
  }

  void guard_block(Cursor& c, const std::string& base, const std::string& kind, const Term& lhs, RelOp op,
                   const Term& rhs, const std::function<void(Cursor&)>& ok, const std::string& exc) {
    int b = new_block(namer_.numbered(base), kind, c.rform, 2);
    jump(c, b);
    Instr g;
    g.op = Instr::Op::Compare;
    g.a = lhs;
    g.b = rhs;
    g.rel = op;
    cfg_.blocks[b].arms[0].guard = g;
    g.rel = negate(op);
    cfg_.blocks[b].arms[1].guard = g;
    cfg_.blocks[b].arms[1].label = exc;
    Cursor c0{b, 0, c.rform}, c1{b, 1, c.rform};
    ok(c0);
    throw_exc(c1, exc);
  }

  void bounds_check(Cursor& c, int arr, const Term& idx, const std::function<void(Cursor&)>& k) {
    int len = temp(Term::atom("int"), "len");
    Instr l;
    l.op = Instr::Op::Length;
    l.dst = len;
    l.a = key_of(arr);
    emit(c, l);
    guard_block(c, "oobcheck", "oobcheck", idx, RelOp::Ge, Term::integer(0), [this, idx, len, k](Cursor& c2) {
      guard_block(c2, "oobcheck", "oobcheck", idx, RelOp::Lt, slot_term(len), k, "OOB");
    }, "OOB");
  }

  void eval(Cursor& c, const Expr& e, const EK& k, int hint = -1) {
    switch (e.kind) {
      case Expr::Kind::IntLit:
      case Expr::Kind::BoolLit: return k(c, Term::integer(e.value));
      case Expr::Kind::Null: return k(c, Term::null());
      case Expr::Kind::This: return k(c, slot_term(0));
      case Expr::Kind::Name: return k(c, slot_term(e.slot));
      case Expr::Kind::Field:
        return eval_ref(c, *e.kids[0], [this, &e, k, hint](Cursor& c2, int obj) {
          Instr i;
          i.op = Instr::Op::GetField;
          i.a = key_of(obj);
          i.name = e.decl_class;
          i.b = Term::atom(e.name);
          i.dst = def_slot(c2, hint, e.type, e.name, false);
          emit(c2, i);
          k(c2, slot_term(i.dst));
        });
      case Expr::Kind::Length:
        return eval_ref(c, *e.kids[0], [this, k, hint](Cursor& c2, int arr) {
          Instr i;
          i.op = Instr::Op::Length;
          i.a = key_of(arr);
          i.dst = def_slot(c2, hint, Term::atom("int"), "len", false);
          emit(c2, i);
          k(c2, slot_term(i.dst));
        });
      case Expr::Kind::Index:
        return eval_ref(c, *e.kids[0], [this, &e, k, hint](Cursor& c2, int arr) {
          eval(c2, *e.kids[1], [this, &e, arr, k, hint](Cursor& c3, Term idx) {
            Term ix = simple(c3, idx, Term::atom("int"), "i");
            bounds_check(c3, arr, ix, [this, &e, arr, ix, k, hint](Cursor& c4) {
              Instr i;
              i.op = Instr::Op::GetArray;
              i.a = key_of(arr);
              i.b = ix;
              i.dst = def_slot(c4, hint, e.type, "elem", false);
              emit(c4, i);
              k(c4, slot_term(i.dst));
            });
          });
        });
      case Expr::Kind::New: {
        Instr i;
        i.op = Instr::Op::New;
        i.name = e.name;
        i.dst = def_slot(c, hint, e.type, "obj", true);
        emit(c, i);
        return k(c, slot_term(i.dst));
      }
      case Expr::Kind::NewArray:
        return eval(c, *e.kids[0], [this, &e, k, hint](Cursor& c2, Term len) {
          Term n = simple(c2, len, Term::atom("int"), "n");
          auto alloc = [this, &e, n, k, hint](Cursor& c3) {
            Instr i;
            i.op = Instr::Op::NewArray;
            i.a = e.elem_type;
            i.b = n;
            i.dst = def_slot(c3, hint, e.type, "arr", true);
            emit(c3, i);
            k(c3, slot_term(i.dst));
          };
          if (n.is_int()) {
            if (n.int_value() >= 0) return alloc(c2);
            return throw_exc(c2, "OOB");
          }
          guard_block(c2, "oobcheck", "oobcheck", n, RelOp::Ge, Term::integer(0), alloc, "OOB");
        });
      case Expr::Kind::Unary:
        return eval(c, *e.kids[0], [k](Cursor& c2, Term v) {
          k(c2, v.is_int() ? Term::integer(-v.int_value()) : Term::compound("-", {Term::integer(0), v}));
        });
      case Expr::Kind::Binary:
        return eval(c, *e.kids[0], [this, &e, k](Cursor& c2, Term l) {
          eval(c2, *e.kids[1], [this, &e, l, k](Cursor& c3, Term r) {
            std::string op = e.op == "%" ? "mod" : e.op;
            if (op != "/" && op != "mod") return k(c3, Term::compound(op, {l, r}));
            if (r.is_int() && r.int_value() != 0) return k(c3, Term::compound(op, {l, r}));
            Term rs = simple(c3, r, Term::atom("int"), "d");
            guard_block(c3, "divcheck", "divcheck", rs, RelOp::Ne, Term::integer(0),
                        [k, op, l, rs](Cursor& c4) { k(c4, Term::compound(op, {l, rs})); }, "ARITH");
          });
        });
      case Expr::Kind::Call: return call(c, e, k, hint);
    }
  }

  void call(Cursor& c, const Expr& e, const EK& k, int hint) {
    eval_ref(c, *e.kids[0], [this, &e, k, hint](Cursor& c2, int recv) {
      auto args = std::make_shared<std::vector<const Expr*>>();
      for (std::size_t i = 1; i < e.kids.size(); ++i) args->push_back(e.kids[i].get());
      eval_all(c2, *args, 0, {}, [this, &e, recv, k, hint, args](Cursor& c3, std::vector<Term> vals) {
        std::vector<Term> in{slot_term(recv)};
        in.insert(in.end(), vals.begin(), vals.end());
        bool has_ret = !e.type.is_atom("void");
        int dst = has_ret ? def_slot(c3, hint, e.type, e.name, false) : -1;
        int ef = temp(Term::atom("$flag"), "ef");
        auto classes = ast_.table.subclasses_of(e.decl_class);
        auto make_call = [&](const MethodDecl& impl) {
          Instr i;
          i.op = Instr::Op::Call;
          i.name = impl.pred();
          i.a = Term::list(in);
          i.dst = dst;
          i.ef = ef;
          return i;
        };
        int from = c3.block;
        std::set<int> rf = c3.rform;
        int dispatch = -1;
        if (classes.size() == 1) {
          if (const MethodDecl* impl = ast_.resolve_method(e.decl_class, e.name); impl && impl->body)
            emit(c3, make_call(*impl));
        } else {
          dispatch = new_block(namer_.numbered("dispatch"), "dispatch", rf, 0);
          jump(c3, dispatch);
        }
        int check = new_block(namer_.numbered("excheck"), "excheck", rf, 2);
        if (dispatch < 0) {
          jump(c3, check);
        } else {
          for (const auto& d : classes) {
            const MethodDecl* impl = ast_.resolve_method(d, e.name);
            if (!impl || !impl->body) continue;
            Arm a;
            a.type_guard = std::make_pair(recv, d);
            a.label = "type " + d;
            a.instrs.push_back(make_call(*impl));
            a.term.kind = Terminator::Kind::Goto;
            a.term.target = check;
            cfg_.blocks[dispatch].arms.push_back(std::move(a));
          }
        }
        (void)from;
        Block& cb = cfg_.blocks[check];
        cb.arms[0].patterns.push_back({ef, Pattern::Kind::Ok});
        cb.arms[0].label = "ok";
        cb.arms[1].patterns.push_back({ef, Pattern::Kind::Exc});
        cb.arms[1].label = "exc";
        cb.arms[1].term.kind = Terminator::Kind::Rethrow;
        cb.arms[1].term.slot = ef;
        std::set<int> after = rf;
        if (dst >= 0) after.erase(dst);
        Cursor ok{check, 0, after};
        k(ok, dst >= 0 ? slot_term(dst) : Term::integer(0));
      });
    });
  }

  // ---- conditions ----

  void lower_cond(Cursor c, const Expr& e, KontPtr on_true, KontPtr on_false, const std::string& base,
                  std::optional<int> into) {
    std::string next_base = base == "loopcond" ? "loopcond" : "cond";
    if (e.kind == Expr::Kind::Binary && e.op == "&&") {
      auto f = Kont::share(on_false);
      return lower_cond(c, *e.kids[0], Kont::cond_k(e.kids[1].get(), on_true, f, next_base), f, base, into);
    }
    if (e.kind == Expr::Kind::Binary && e.op == "||") {
      auto t = Kont::share(on_true);
      return lower_cond(c, *e.kids[0], t, Kont::cond_k(e.kids[1].get(), t, on_false, next_base), base, into);
    }
    if (e.kind == Expr::Kind::Unary && e.op == "!") return lower_cond(c, *e.kids[0], on_false, on_true, base, into);

    auto decide = [this, &e, on_true, on_false, base, into](Cursor& c2, std::vector<Term> ops) {
      int b;
      if (into) {
        b = *into;
      } else {
        b = new_block(namer_.numbered(base), base, c2.rform, 0);
        jump(c2, b);
      }
      std::set<int> rf(cfg_.blocks[b].ref_slots.begin(), cfg_.blocks[b].ref_slots.end());
      fill_decision(b, rf, e, ops, on_true, on_false);
    };
    if (into) {
      std::vector<Term> ops;
      if (e.kind == Expr::Kind::Binary) {
        ops.push_back(pure_term(*e.kids[0]));
        ops.push_back(pure_term(*e.kids[1]));
      } else {
        ops.push_back(pure_term(e));
      }
      Cursor dummy;
      return decide(dummy, ops);
    }
    if (e.kind == Expr::Kind::Binary) {
      return eval(c, *e.kids[0], [this, &e, decide](Cursor& c2, Term l) {
        eval(c2, *e.kids[1], [decide, l](Cursor& c3, Term r) { decide(c3, {l, r}); });
      });
    }
    eval(c, e, [decide](Cursor& c2, Term v) { decide(c2, {v}); });
  }

  void lower_cond_into(int b, const Expr& e, KontPtr on_true, KontPtr on_false) {
    lower_cond(Cursor{}, e, std::move(on_true), std::move(on_false), "if", b);
  }

  void fill_decision(int b, const std::set<int>& rf, const Expr& e, std::vector<Term> ops, const KontPtr& on_true,
                     const KontPtr& on_false) {
    Arm f, t;
    std::set<int> rf_t = rf, rf_f = rf;
    auto compare = [&](RelOp op, Term l, Term r) {
      Instr g;
      g.op = Instr::Op::Compare;
      g.a = l;
      g.b = r;
      g.rel = op;
      t.guard = g;
      g.rel = negate(op);
      f.guard = g;
    };
    if (e.kind == Expr::Kind::Binary) {
      RelOp op = *relop_from_symbol(e.op == "==" ? "#=" : e.op == "!=" ? "#\\=" : e.op == "<=" ? "#=<" : "#" + e.op);
      Term l = ops[0], r = ops[1];
      bool lref = is_ref_type(e.kids[0]->type) || e.kids[0]->type.is_atom("$null");
      bool rref = is_ref_type(e.kids[1]->type) || e.kids[1]->type.is_atom("$null");
      if (lref && rref) {
        bool eq = e.op == "==";
        Arm& same = eq ? t : f;
        Arm& diff = eq ? f : t;
        std::set<int>& rf_same = eq ? rf_t : rf_f;
        std::set<int>& rf_diff = eq ? rf_f : rf_t;
        if (l.kind() == TermKind::Null) std::swap(l, r);
        if (l.kind() == TermKind::Null) {
          compare(eq ? RelOp::Eq : RelOp::Ne, Term::integer(0), Term::integer(0));
        } else if (r.kind() == TermKind::Null) {
          int s = slot_of(l);
          same.patterns.push_back({s, Pattern::Kind::Null});
          diff.patterns.push_back({s, Pattern::Kind::Ref});
          rf_same.erase(s);
          rf_diff.insert(s);
        } else {
          int a = slot_of(l), c = slot_of(r);
          same.patterns.push_back({a, Pattern::Kind::Same, c});
          diff.ref_neq = std::make_pair(a, c);
          if (rf_same.count(a) || rf_same.count(c)) {
            rf_same.insert(a);
            rf_same.insert(c);
          }
        }
      } else {
        compare(op, l, r);
      }
    } else {
      compare(RelOp::Ne, ops[0], Term::integer(0));
    }
    t.label = "true";
    f.label = "false";
    Block& blk = cfg_.blocks[b];
    blk.arms.clear();
    blk.arms.push_back(std::move(f));
    blk.arms.push_back(std::move(t));
    lower(Cursor{b, 1, rf_t}, on_true);
    lower(Cursor{b, 0, rf_f}, on_false);
  }

  const SourceAst& ast_;
  const MethodDecl& m_;
  Namer& namer_;
  MethodCfg& cfg_;
  NullnessAnalysis nulls_;
  std::set<const std::vector<StmtPtr>*> loop_lists_;
  std::map<const Stmt*, int> loop_blocks_, if_blocks_;
  std::map<std::pair<const std::vector<StmtPtr>*, std::size_t>, int> join_blocks_;
};

}  // namespace

Cfg build_cfg(const SourceAst& ast) {
  Cfg cfg;
  Namer namer;
  for (const auto& c : ast.classes)
    for (const auto& m : c.methods) {
      if (!m.body) continue;
      cfg.methods.emplace_back();
      MethodBuilder(ast, m, namer, cfg.methods.back()).run();
    }
  return cfg;
}

}  // namespace tcg::moo
