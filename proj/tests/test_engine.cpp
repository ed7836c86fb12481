#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tcg/engine.hpp"

using namespace tcg;

namespace {

Program load(const std::string& name) {
  std::ifstream in(std::string(TCG_FIXTURES) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  auto r = parse_ir(ss.str());
  REQUIRE(r.program);
  return *r.program;
}

Program parse_ok(std::string_view text) {
  auto r = parse_ir(text);
  for (const auto& d : r.diagnostics) INFO(d.str());
  REQUIRE(r.diagnostics.empty());
  return *r.program;
}

std::vector<Resultant> run(const Program& p, const std::string& entry, Criterion c, AliasMode alias,
                           bool failures = false) {
  Store s;
  Engine e(p, {ExecMode::Symbolic, alias, c, true, failures});
  auto eg = e.make_entry(s, entry);
  return e.unfold(s, eg.atom, {eg.call});
}

std::size_t count(const std::vector<Resultant>& rs, StopReason why) {
  std::size_t n = 0;
  for (const auto& r : rs) n += r.stop == why;
  return n;
}

bool exceptional(const Resultant& r) { return r.store.deref(r.root.arg(4)).is_compound("exc", 1); }

}  // namespace

TEST_CASE("criterion specs") {
  auto b = Criterion::parse("block-k:2");
  REQUIRE(b);
  CHECK(b->kind == Criterion::Kind::BlockK);
  CHECK(b->k == 2);
  CHECK(Criterion::parse("depth-k:0")->str() == "depth-k:0");
  CHECK_FALSE(Criterion::parse("block-k:0"));
  CHECK_FALSE(Criterion::parse("loop-k:2"));
  CHECK_FALSE(Criterion::parse("depth-k:x"));
}

TEST_CASE("leftmost selection with optional delayed skipping") {
  Literal ns{LitKind::NoShare, RelOp::Eq, "", {Term::null(), Term::null()}, {}};
  Literal b{LitKind::Call, RelOp::Eq, "b", {}, {}};
  CHECK(select_literal({b, ns}, true) == 0u);
  CHECK(select_literal({ns, b}, true) == 1u);
  CHECK(select_literal({ns, b}, false) == 0u);
  CHECK_FALSE(select_literal({}, true));
  CHECK_FALSE(select_literal({ns}, true));
}

TEST_CASE("merge: nine paths without aliasing, sixteen with") {
  Program p = load("merge.ir");
  auto off = run(p, "SortedList.merge", {Criterion::Kind::BlockK, 2}, AliasMode::Off);
  CHECK(count(off, StopReason::Success) == 9);
  std::size_t exc = 0;
  for (const auto& r : off)
    if (r.stop == StopReason::Success) exc += exceptional(r);
  CHECK(exc == 3);

  auto on = run(p, "SortedList.merge", {Criterion::Kind::BlockK, 2}, AliasMode::On);
  CHECK(count(on, StopReason::Success) == 16);
  std::size_t exc_on = 0;
  std::set<std::vector<TraceStep>> traces_on, traces_off;
  for (const auto& r : on)
    if (r.stop == StopReason::Success) {
      exc_on += exceptional(r);
      traces_on.insert(r.trace);
    }
  CHECK(exc_on == 4);
  for (const auto& r : off)
    if (r.stop == StopReason::Success) traces_off.insert(r.trace);
  CHECK(traces_off.size() == 9);
  CHECK(std::includes(traces_on.begin(), traces_on.end(), traces_off.begin(), traces_off.end()));
}

TEST_CASE("depth-k bounds") {
  Program p = load("merge.ir");
  auto zero = run(p, "SortedList.merge", {Criterion::Kind::DepthK, 0}, AliasMode::Off);
  CHECK(count(zero, StopReason::Success) == 0);
  CHECK(count(zero, StopReason::CriterionStop) == 1);

  std::set<std::vector<TraceStep>> prev;
  for (int k : {1, 5, 10, 20, 30, 40, 60}) {
    auto rs = run(p, "SortedList.merge", {Criterion::Kind::DepthK, k}, AliasMode::Off);
    std::set<std::vector<TraceStep>> cur;
    for (const auto& r : rs)
      if (r.stop == StopReason::Success) cur.insert(r.trace);
    CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    for (const auto& r : rs)
      if (r.stop == StopReason::CriterionStop) CHECK(r.steps == k);
    prev = cur;
  }
  CHECK(prev.size() > 3);
}

TEST_CASE("reduce picks the clause matching a null argument") {
  Program p = load("merge.ir");
  Store s;
  Engine e(p, {});
  Literal call{LitKind::Call, RelOp::Eq, "loopcond1", {}, {}};
  call.args = {Term::list({s.fresh_var(), s.fresh_var(), Term::null(), s.fresh_var(), s.fresh_var()}),
               s.fresh_var(), s.fresh_var(), s.fresh_var(), s.fresh_var()};
  std::vector<int> picked;
  e.reduce_call(s, call, [&](int ci, const std::vector<Literal>&) { picked.push_back(ci); });
  CHECK(picked == std::vector<int>{1});
}

TEST_CASE("guards post constraints; unsatisfiable guards prune silently") {
  Program p = parse_ok("p([X,Y],[],H,H,ok) :- X #> Y.\np([X,Y],[],H,H,ok) :- X #=< Y, X #> 100.");
  auto rs = run(p, "p", {Criterion::Kind::BlockK, 1}, AliasMode::Off);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].stop == StopReason::Success);
  CHECK(rs[0].store.constraints().size() == 1);
}

TEST_CASE("failure leaves are recorded only on request") {
  Program p = parse_ok("p([X],[],H,H,ok) :- X #> 0, X #< 0.");
  CHECK(run(p, "p", {Criterion::Kind::BlockK, 1}, AliasMode::Off).empty());
  auto rs = run(p, "p", {Criterion::Kind::BlockK, 1}, AliasMode::Off, true);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].stop == StopReason::Failure);
}

TEST_CASE("block-k counts covering ancestors of the selected call") {
  Program p = parse_ok("c([N],[],H,H,ok) :- N #> 0, M #= N - 1, c([M],[],H,H,ok).\nc([N],[],H,H,ok) :- N #=< 0.");
  for (int k : {1, 2, 3}) {
    auto rs = run(p, "c", {Criterion::Kind::BlockK, k}, AliasMode::Off);
    CHECK(count(rs, StopReason::Success) == static_cast<std::size_t>(k));
    CHECK(count(rs, StopReason::CriterionStop) == 1);
  }
  AncestorChain a = std::make_shared<const Ancestor>(Ancestor{"c", nullptr});
  a = std::make_shared<const Ancestor>(Ancestor{"d", a});
  a = std::make_shared<const Ancestor>(Ancestor{"c", a});
  CHECK(ancestor_count(a, "c") == 2);
  CHECK(ancestor_count(a, "e") == 0);
}

TEST_CASE("straight-line code never hits block-k") {
  Program p = parse_ok("a([X],[],H,H,ok) :- b([X],[],H,H,ok).\nb([X],[],H,H,ok) :- X #> 1.");
  auto rs = run(p, "a", {Criterion::Kind::BlockK, 1}, AliasMode::Off);
  CHECK(count(rs, StopReason::Success) == 1);
  CHECK(count(rs, StopReason::CriterionStop) == 0);
}

TEST_CASE("reference disequality splits unbound operands") {
  Program p = parse_ok("p([A,B],[],H,H,ok) :- A \\== B.");
  auto rs = run(p, "p", {Criterion::Kind::BlockK, 1}, AliasMode::Off);
  // null/r, r/null, r/r with distinct keys
  CHECK(count(rs, StopReason::Success) == 3);
}

TEST_CASE("ground execution flags nondeterminism") {
  Program p = parse_ok("p([X],[],H,H,ok) :- X #> 0.\np([X],[],H,H,ok) :- X #> 1.");
  Store s;
  Engine e(p, {ExecMode::Ground, AliasMode::Off, {Criterion::Kind::DepthK, 100}});
  Literal call{LitKind::Call, RelOp::Eq, "p", {Term::list({Term::integer(5)}), Term::nil(), Term::nil(), s.fresh_var(), Term::atom("ok")}, {}};
  auto rs = e.unfold(s, Term::atom("root"), {call});
  CHECK(rs.size() == 2);
  CHECK(e.determinism_violated());
}
