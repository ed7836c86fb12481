#include <algorithm>
#include <deque>
#include <stdexcept>

#include "tcg/harness.hpp"

namespace tcg {

namespace {

std::string exflag_class(const Store& s, const Term& ef, const Term& heap) {
  Term f = s.resolve(ef);
  if (f.is_atom("ok")) return "ok";
  if (!f.is_compound("exc", 1) || !f.arg(0).is_int()) return "?";
  auto cells = heap_map(s.resolve(heap));
  auto it = cells.find(f.arg(0).int_value());
  if (it == cells.end() || !it->second.is_compound("object", 2)) return "?";
  return it->second.arg(0).name();
}

}  // namespace

ReplayResult replay_ground(const TestCase& tc, const Program& prog, int step_limit) {
  ReplayResult out;
  Store s;
  Engine e(prog, {ExecMode::Ground, AliasMode::Off, {Criterion::Kind::DepthK, step_limit}, true, false});
  EntryGoal eg = e.make_entry(s, tc.entry);
  if (!s.unify(eg.args_in, Term::list(tc.input_args)) || !s.unify(eg.h_in, tc.input_heap)) {
    out.diff = "input does not fit the entry";
    return out;
  }
  std::vector<Resultant> rs;
  try {
    rs = e.unfold(s, eg.atom, {eg.call});
  } catch (const DanglingReference& ex) {
    out.diff = ex.what();
    return out;
  }
  if (e.determinism_violated()) {
    out.diff = "determinism violated";
    return out;
  }
  std::vector<const Resultant*> ok;
  for (const auto& r : rs) {
    if (r.stop == StopReason::CriterionStop) {
      out.diff = "step limit reached";
      return out;
    }
    if (r.stop == StopReason::Success) ok.push_back(&r);
  }
  if (ok.size() != 1) {
    out.diff = std::to_string(ok.size()) + " ground derivations";
    return out;
  }
  const Resultant& r = *ok[0];
  out.exercised = r.exercised;
  if (r.trace != tc.trace) {
    out.diff = "trace differs: " + trace_to_string(r.trace);
    return out;
  }
  const Term& root = r.root;
  std::string flag = exflag_class(r.store, root.arg(4), root.arg(3));
  if (flag != tc.exflag) {
    out.diff = "exception flag " + flag + ", expected " + tc.exflag;
    return out;
  }
  if (!tc.exceptional()) {
    std::vector<Term> got_out;
    if (!list_items(r.store.resolve(root.arg(1)), got_out)) {
      out.diff = "output arguments are not a list";
      return out;
    }
    std::vector<Term> roots_a = tc.input_args, roots_b = tc.input_args;
    roots_a.insert(roots_a.end(), tc.output_args.begin(), tc.output_args.end());
    roots_b.insert(roots_b.end(), got_out.begin(), got_out.end());
    std::string why;
    if (!tc.output_heap || !equivalent_states(roots_a, *tc.output_heap, roots_b, r.store.resolve(root.arg(3)), &why)) {
      out.diff = "output differs: " + why;
      return out;
    }
  }
  out.pass = true;
  return out;
}

std::set<InstrId> reachable_instructions(const Program& prog, const std::string& entry) {
  std::set<InstrId> out;
  std::set<std::string> seen{entry};
  std::deque<std::string> todo{entry};
  while (!todo.empty()) {
    std::string name = todo.front();
    todo.pop_front();
    const Predicate* p = prog.find(name);
    if (!p) continue;
    for (std::size_t ci = 0; ci < p->clauses.size(); ++ci) {
      const Clause& c = p->clauses[ci];
      int lit = 0;
      if (c.guard) out.insert({name, static_cast<int>(ci + 1), lit++});
      for (const auto& l : c.body) {
        out.insert({name, static_cast<int>(ci + 1), lit++});
        if (l.kind == LitKind::Call && seen.insert(l.pred).second) todo.push_back(l.pred);
      }
    }
  }
  return out;
}

Coverage measure_coverage(const std::vector<std::vector<InstrId>>& exercised, const Program& prog,
                          const std::string& entry) {
  auto reach = reachable_instructions(prog, entry);
  std::set<InstrId> hit;
  for (const auto& run : exercised)
    for (const auto& id : run)
      if (reach.count(id)) hit.insert(id);
  return {hit.size(), reach.size()};
}

// ---- preconditions ----

const std::vector<std::string>& reserved_precondition_names() {
  static const std::vector<std::string> names{"Args_in", "Args_out", "H_in", "H_out", "EF"};
  return names;
}

std::optional<Precondition> parse_precondition(std::string_view text, std::vector<Diagnostic>& diags) {
  // Drop % comments and a final period.
  std::string body;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%') {
      while (i < text.size() && text[i] != '\n') ++i;
      if (i < text.size()) body += '\n';
      continue;
    }
    body += text[i];
  }
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.pop_back();
  if (!body.empty() && body.back() == '.') body.pop_back();
  Precondition pre;
  pre.names = reserved_precondition_names();
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return pre;
  auto lits = parse_goal(body, pre.names, diags);
  if (!lits) return std::nullopt;
  std::set<VarId> bound;
  for (std::size_t v = 0; v < reserved_precondition_names().size(); ++v) bound.insert(static_cast<VarId>(v));
  for (auto& l : *lits) {
    if (l.kind == LitKind::Call) {
      diags.push_back({Diagnostic::Severity::Error, l.pos, "predicate call " + l.pred + " in a precondition"});
      continue;
    }
    if (l.is_delayed_property()) {
      pre.level2.push_back(l);
    } else {
      for (const auto& a : l.args) {
        std::vector<VarId> vs;
        collect_vars(a, vs);
        bound.insert(vs.begin(), vs.end());
      }
      pre.level1.push_back(l);
    }
  }
  for (const auto& l : pre.level2)
    for (const auto& a : l.args) {
      std::vector<VarId> vs;
      collect_vars(a, vs);
      for (VarId v : vs)
        if (!bound.count(v) && pre.names[v][0] != '_')
          diags.push_back({Diagnostic::Severity::Error, l.pos, "name " + pre.names[v] + " is not bound to the entry"});
    }
  if (has_errors(diags)) return std::nullopt;
  return pre;
}

std::vector<Literal> apply_precondition(const Precondition& pre, Store& store, const EntryGoal& entry) {
  if (pre.level1.empty() && pre.level2.empty()) return {entry.call};
  VarId base = store.fresh_block(pre.names.size());
  const Term reserved[] = {entry.args_in, entry.args_out, entry.h_in, entry.h_out, entry.ef};
  for (VarId i = 0; i < 5; ++i) store.unify(Term::var(base + i), reserved[i]);
  auto shifted = [&](Literal l) {
    for (auto& a : l.args) a = shift_vars(a, base);
    return l;
  };
  std::vector<Literal> goal;
  for (const auto& l : pre.level1) goal.push_back(shifted(l));
  goal.push_back(entry.call);
  for (const auto& l : pre.level2) goal.push_back(shifted(l));
  return goal;
}

// ---- suites ----

bool Suite::all_replays_pass() const {
  return std::all_of(replays.begin(), replays.end(), [](const ReplayResult& r) { return r.pass; });
}

Suite generate_suite(const Program& prog, const std::string& entry, const SuiteOptions& opts) {
  const Predicate* pred = prog.find(entry);
  if (!pred) throw std::invalid_argument("unknown entry " + entry);
  MethodInfo info;
  if (const MethodInfo* m = prog.entry(entry)) info = *m;
  else info.pred = entry;

  Suite suite;
  suite.entry = entry;
  suite.options = opts;
  Store store(opts.bounds);
  Engine engine(prog, {ExecMode::Symbolic, opts.alias, opts.criterion, true, false});
  EntryGoal eg = engine.make_entry(store, entry);
  std::vector<Literal> goal = opts.pre ? apply_precondition(*opts.pre, store, eg) : std::vector<Literal>{eg.call};
  std::vector<std::vector<InstrId>> exercised;
  for (const auto& r : engine.unfold(store, eg.atom, goal)) {
    if (r.stop == StopReason::CriterionStop) {
      ++suite.stopped;
      continue;
    }
    if (r.stop != StopReason::Success) continue;
    Grounding g = ground_resultant(r, prog, info);
    if (!g.test) {
      ++suite.ungroundable;
      continue;
    }
    if (!g.properties_hold) {
      ++suite.discarded;
      continue;
    }
    g.test->id = static_cast<int>(suite.cases.size()) + 1;
    suite.cases.push_back(std::move(*g.test));
    if (!opts.replay) exercised.push_back(r.exercised);
  }
  if (opts.replay) {
    for (const auto& tc : suite.cases) {
      suite.replays.push_back(replay_ground(tc, prog));
      exercised.push_back(suite.replays.back().exercised);
    }
  }
  suite.coverage = measure_coverage(exercised, prog, entry);
  return suite;
}

}  // namespace tcg
