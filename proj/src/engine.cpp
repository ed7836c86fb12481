#include "tcg/engine.hpp"

#include <pthread.h>

#include <charconv>
#include <exception>
#include <sstream>

namespace tcg {

std::string trace_to_string(const std::vector<TraceStep>& trace) {
  std::ostringstream os;
  for (std::size_t i = 0; i < trace.size(); ++i) os << (i ? " " : "") << trace[i].pred << "/" << trace[i].clause;
  return os.str();
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Success: return "success";
    case StopReason::CriterionStop: return "criterion-stop";
    case StopReason::Failure: return "failure";
  }
  return "?";
}

std::optional<Criterion> Criterion::parse(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto name = spec.substr(0, colon), num = spec.substr(colon + 1);
  Criterion c;
  if (name == "block-k")
    c.kind = Kind::BlockK;
  else if (name == "depth-k")
    c.kind = Kind::DepthK;
  else
    return std::nullopt;
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), c.k);
  if (ec != std::errc() || p != num.data() + num.size() || c.k < 0) return std::nullopt;
  if (c.kind == Kind::BlockK && c.k == 0) return std::nullopt;
  return c;
}

std::string Criterion::str() const {
  return std::string(kind == Kind::BlockK ? "block-k:" : "depth-k:") + std::to_string(k);
}

int ancestor_count(const AncestorChain& chain, const std::string& pred) {
  int n = 0;
  for (const Ancestor* a = chain.get(); a; a = a->up.get())
    if (a->pred == pred) ++n;
  return n;
}

std::optional<std::size_t> select_literal(const std::vector<Literal>& goal, bool skip_delayed) {
  for (std::size_t i = 0; i < goal.size(); ++i)
    if (!(skip_delayed && goal[i].is_delayed_property())) return i;
  return std::nullopt;
}

namespace {

struct Scope {
  Store& s;
  Store::Mark m;
  explicit Scope(Store& st) : s(st), m(st.mark()) {}
  ~Scope() { s.undo(m); }
};

struct Item {
  Literal lit;
  AncestorChain anc;
  std::optional<InstrId> id;
};

struct GoalNode {
  Item item;
  std::shared_ptr<const GoalNode> next;
};
using Goal = std::shared_ptr<const GoalNode>;

template <class T>
struct PNode {
  T value;
  std::shared_ptr<const PNode> prev;
};
template <class T>
using PList = std::shared_ptr<const PNode<T>>;

template <class T>
PList<T> push(const PList<T>& l, T v) {
  return std::make_shared<const PNode<T>>(PNode<T>{std::move(v), l});
}

template <class T>
std::vector<T> to_vector(const PList<T>& l) {
  std::vector<T> out;
  for (const PNode<T>* n = l.get(); n; n = n->prev.get()) out.push_back(n->value);
  return {out.rbegin(), out.rend()};
}

Literal rename(const Literal& l, VarId off) {
  Literal r = l;
  for (auto& a : r.args) a = shift_vars(a, off);
  return r;
}

// Runs f on a thread with a large stack: derivations recurse once per step.
void run_on_big_stack(const std::function<void()>& f) {
  struct Ctx {
    const std::function<void()>* f;
    std::exception_ptr err;
  } ctx{&f, nullptr};
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, std::size_t(1) << 30);
  pthread_t th;
  auto body = [](void* p) -> void* {
    auto* c = static_cast<Ctx*>(p);
    try {
      (*c->f)();
    } catch (...) {
      c->err = std::current_exception();
    }
    return nullptr;
  };
  if (pthread_create(&th, &attr, body, &ctx) != 0) {
    pthread_attr_destroy(&attr);
    f();
    return;
  }
  pthread_join(th, nullptr);
  pthread_attr_destroy(&attr);
  if (ctx.err) std::rethrow_exception(ctx.err);
}

}  // namespace

Engine::Engine(const Program& prog, EngineOptions opts) : prog_(prog), opts_(opts) {}

EntryGoal Engine::make_entry(Store& store, const std::string& pred) const {
  std::size_t n = 0;
  if (const MethodInfo* m = prog_.entry(pred)) {
    n = m->param_types.size();
  } else if (const Predicate* p = prog_.find(pred); p && !p->clauses.empty()) {
    std::vector<Term> items;
    list_items(p->clauses[0].args_in, items);
    n = items.size();
  }
  EntryGoal e;
  for (std::size_t i = 0; i < n; ++i) e.params.push_back(store.fresh_var());
  e.args_in = Term::list(e.params);
  e.args_out = store.fresh_var();
  e.h_in = store.fresh_var();
  e.h_out = store.fresh_var();
  e.ef = store.fresh_var();
  e.call.kind = LitKind::Call;
  e.call.pred = pred;
  e.call.args = {e.args_in, e.args_out, e.h_in, e.h_out, e.ef};
  e.atom = Term::compound(pred, e.call.args);
  return e;
}

void Engine::reduce_call(Store& store, const Literal& call,
                         const std::function<void(int, const std::vector<Literal>&)>& k) {
  const Predicate* pred = prog_.find(call.pred);
  if (!pred) return;
  int applicable = 0;
  for (std::size_t ci = 0; ci < pred->clauses.size(); ++ci) {
    const Clause& c = pred->clauses[ci];
    Scope sc(store);
    VarId off = store.fresh_block(c.num_vars());
    const Term head[5] = {c.args_in, c.args_out, c.h_in, c.h_out, c.exflag};
    bool ok = true;
    for (int i = 0; i < 5 && ok; ++i) ok = store.unify(call.args[i], shift_vars(head[i], off));
    if (!ok) continue;
    std::vector<Literal> body;
    for (const auto& l : c.body) body.push_back(rename(l, off));
    auto go = [&] {
      ++applicable;
      k(static_cast<int>(ci) + 1, body);
    };
    if (c.guard)
      exec_builtin(store, rename(*c.guard, off), go);
    else
      go();
  }
  if (opts_.mode == ExecMode::Ground && applicable > 1) nondeterministic_ = true;
}

void Engine::exec_builtin(Store& s, const Literal& l, const Cont& k) {
  HeapContext ctx{s, prog_.classes, opts_.mode, opts_.alias};
  const auto& a = l.args;
  switch (l.kind) {
    case LitKind::Compare:
    case LitKind::Assign: {
      Scope sc(s);
      if (s.post({l.kind == LitKind::Assign ? RelOp::Eq : l.op, a[0], a[1]})) k();
      return;
    }
    case LitKind::RefNeq: {
      Term x = s.deref(a[0]), y = s.deref(a[1]);
      if (s.syntactic_eq(x, y)) return;
      // An unbound ref-or-null operand is split into its null and non-null cases.
      for (const Term* t : {&x, &y}) {
        if (!t->is_var()) continue;
        if (opts_.mode == ExecMode::Ground) return;
        for (Term v : {Term::null(), Term::ref(s.fresh_var())}) {
          Scope sc(s);
          if (s.unify(*t, v)) exec_builtin(s, l, k);
        }
        return;
      }
      if (x.kind() == TermKind::Ref && y.kind() == TermKind::Ref) {
        Term kx = s.deref(x.arg(0)), ky = s.deref(y.arg(0));
        if (kx.is_int() && ky.is_int()) {
          if (kx.int_value() != ky.int_value()) k();
          return;
        }
        Scope sc(s);
        if (s.post({RelOp::Ne, kx, ky})) k();
        return;
      }
      k();
      return;
    }
    case LitKind::TypeGuard:
      type_guard(ctx, a[0], a[1], a[2], k);
      return;
    case LitKind::NewObject:
      new_object(ctx, a[0], a[1], a[2], a[3], k);
      return;
    case LitKind::NewArray:
      new_array(ctx, a[0], a[1], a[2], a[3], a[4], k);
      return;
    case LitKind::Length:
      length_of(ctx, a[0], a[1], a[2], k);
      return;
    case LitKind::GetField:
      get_field(ctx, a[0], a[1], a[2], a[3], k);
      return;
    case LitKind::SetField:
      set_field(ctx, a[0], a[1], a[2], a[3], a[4], k);
      return;
    case LitKind::GetArray:
      get_array(ctx, a[0], a[1], a[2], a[3], k);
      return;
    case LitKind::SetArray:
      set_array(ctx, a[0], a[1], a[2], a[3], a[4], k);
      return;
    case LitKind::Unify: {
      Scope sc(s);
      if (s.unify(a[0], a[1])) k();
      return;
    }
    case LitKind::Member: {
      for (Term cur = s.deref(a[1]); cur.kind() == TermKind::Cons; cur = s.deref(cur.arg(1))) {
        Scope sc(s);
        if (s.unify(a[0], cur.arg(0))) k();
      }
      return;
    }
    case LitKind::NoShare:
    case LitKind::Acyclic:
      k();  // decided by the harness on grounded heaps
      return;
    case LitKind::Call:
      break;
  }
  throw std::logic_error("exec_builtin on a call literal");
}

struct Engine::Run {
  Engine& e;
  Store& s;
  Term root;
  std::vector<Resultant> out;

  void record(StopReason why, const Goal& g, const PList<TraceStep>& tr, const PList<InstrId>& ex, int steps) {
    Resultant r{root, {}, {}, s, to_vector(tr), to_vector(ex), why, steps};
    for (const GoalNode* n = g.get(); n; n = n->next.get())
      (why == StopReason::Success ? r.delayed : r.residual).push_back(n->item.lit);
    out.push_back(std::move(r));
  }

  static Goal splice(const std::vector<const Item*>& prefix, const std::vector<Item>& bs, Goal rest) {
    for (auto it = bs.rbegin(); it != bs.rend(); ++it) rest = std::make_shared<const GoalNode>(GoalNode{*it, rest});
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it)
      rest = std::make_shared<const GoalNode>(GoalNode{**it, rest});
    return rest;
  }

  void step(const Goal& g, const PList<TraceStep>& tr, const PList<InstrId>& ex, int steps) {
    if (out.size() >= e.opts_.max_resultants) return;
    std::vector<const Item*> prefix;
    const GoalNode* sel = g.get();
    for (; sel; sel = sel->next.get()) {
      if (!(e.opts_.skip_delayed && sel->item.lit.is_delayed_property())) break;
      prefix.push_back(&sel->item);
    }
    if (!sel) return record(StopReason::Success, g, tr, ex, steps);

    const Item& atom = sel->item;
    const Criterion& cr = e.opts_.criterion;
    bool stop = cr.kind == Criterion::Kind::DepthK
                    ? steps >= cr.k
                    : atom.lit.kind == LitKind::Call && ancestor_count(atom.anc, atom.lit.pred) >= cr.k;
    if (stop) return record(StopReason::CriterionStop, g, tr, ex, steps);

    const Goal& rest = sel->next;
    std::size_t before = out.size();
    bool any = false;
    if (atom.lit.kind == LitKind::Call) {
      AncestorChain anc = std::make_shared<const Ancestor>(Ancestor{atom.lit.pred, atom.anc});
      const Predicate* pred = e.prog_.find(atom.lit.pred);
      e.reduce_call(s, atom.lit, [&](int ci, const std::vector<Literal>& body) {
        any = true;
        const Clause& c = pred->clauses[ci - 1];
        int base = c.guard ? 1 : 0;
        PList<InstrId> ex2 = atom.id ? push(ex, *atom.id) : ex;
        if (c.guard) ex2 = push(ex2, InstrId{pred->name, ci, 0});
        std::vector<Item> bs;
        for (std::size_t i = 0; i < body.size(); ++i)
          bs.push_back({body[i], anc, InstrId{pred->name, ci, base + static_cast<int>(i)}});
        step(splice(prefix, bs, rest), push(tr, TraceStep{pred->name, ci}), ex2, steps + 1);
      });
    } else {
      e.exec_builtin(s, atom.lit, [&] {
        any = true;
        step(splice(prefix, {}, rest), tr, atom.id ? push(ex, *atom.id) : ex, steps + 1);
      });
    }
    if (!any && e.opts_.record_failures && out.size() == before) record(StopReason::Failure, g, tr, ex, steps);
  }
};

std::vector<Resultant> Engine::unfold(Store& store, const Term& root, const std::vector<Literal>& goal) {
  Run run{*this, store, root, {}};
  Goal g;
  for (auto it = goal.rbegin(); it != goal.rend(); ++it) g = std::make_shared<const GoalNode>(GoalNode{{*it, {}, {}}, g});
  run_on_big_stack([&] { run.step(g, {}, {}, 0); });
  return std::move(run.out);
}

}  // namespace tcg
