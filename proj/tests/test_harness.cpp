#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "tcg/harness.hpp"
#include "tcg/minioo.hpp"

using namespace tcg;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(TCG_FIXTURES) + "/" + name);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program compile_fixture(const std::string& name) {
  auto r = moo::compile_source(slurp(name));
  REQUIRE(r.program);
  return *r.program;
}

// Ground term from text, via a unification goal.
Term T(const std::string& text) {
  std::vector<std::string> names;
  std::vector<Diagnostic> diags;
  auto lits = parse_goal("X = " + text, names, diags);
  REQUIRE(lits);
  REQUIRE(lits->size() == 1);
  return (*lits)[0].args[1];
}

SuiteOptions opts(const std::string& crit, AliasMode alias) {
  SuiteOptions o;
  o.criterion = *Criterion::parse(crit);
  o.alias = alias;
  return o;
}

std::set<std::string> trace_set(const Suite& s) {
  std::set<std::string> out;
  for (const auto& tc : s.cases) out.insert(trace_to_string(tc.trace));
  return out;
}

}  // namespace

TEST_CASE("bounds parse") {
  auto b = parse_bounds("-3..5");
  REQUIRE(b);
  CHECK(b->lo == -3);
  CHECK(b->hi == 5);
  CHECK_FALSE(parse_bounds("5..-3"));
  CHECK_FALSE(parse_bounds("1-2"));
}

TEST_CASE("noshare on disjoint and shared lists") {
  // 0 -> 1 -> null ; 2 -> null ; 3 -> 1
  Term h = T("[','(0,object('N',[field(next,r(1))])), ','(1,object('N',[field(next,null)])),"
             " ','(2,object('N',[field(next,null)])), ','(3,object('N',[field(next,r(1))]))]");
  CHECK(noshare(h, T("r(0)"), T("r(2)")));
  CHECK_FALSE(noshare(h, T("r(0)"), T("r(0)")));
  CHECK_FALSE(noshare(h, T("r(0)"), T("r(3)")));
  CHECK(noshare(h, T("null"), T("r(0)")));
}

TEST_CASE("acyclic detects back edges only") {
  Term h = T("[','(0,object('N',[field(next,r(1))])), ','(1,object('N',[field(next,r(0))])),"
             " ','(2,object('N',[field(next,r(1))])), ','(3,object('D',[field(a,r(4)),field(b,r(4))])),"
             " ','(4,object('N',[field(next,null)]))]");
  CHECK_FALSE(acyclic(h, T("r(0)")));
  CHECK_FALSE(acyclic(h, T("r(2)")));
  // diamond, no cycle
  CHECK(acyclic(h, T("r(3)")));
  CHECK(acyclic(h, T("null")));
}

TEST_CASE("equivalence is a bijective renaming") {
  Term ha = T("[','(0,object('N',[field(next,r(1))])), ','(1,object('N',[field(next,null)]))]");
  Term hb = T("[','(5,object('N',[field(next,r(7))])), ','(7,object('N',[field(next,null)])), ','(9,object('X',[]))]");
  CHECK(equivalent_states({T("r(0)")}, ha, {T("r(5)")}, hb));
  // two roots to the same node vs two distinct nodes
  Term hc = T("[','(0,object('N',[field(next,null)])), ','(1,object('N',[field(next,null)]))]");
  std::string why;
  CHECK_FALSE(equivalent_states({T("r(0)"), T("r(0)")}, hc, {T("r(0)"), T("r(1)")}, hc, &why));
  CHECK_FALSE(why.empty());
  CHECK_FALSE(equivalent_states({T("3")}, ha, {T("4")}, ha));
}

TEST_CASE("precondition parsing") {
  std::vector<Diagnostic> diags;
  auto pre = parse_precondition(
      "% comment\nArgs_in = [r(Th),L], member(L,[null,r(L1)]), Th #\\= L1, noshare(Th,L).", diags);
  REQUIRE(pre);
  CHECK(pre->level1.size() == 3);
  REQUIRE(pre->level2.size() == 1);
  CHECK(pre->level2[0].kind == LitKind::NoShare);

  diags.clear();
  CHECK_FALSE(parse_precondition("acyclic(Q)", diags));
  CHECK(has_errors(diags));

  diags.clear();
  CHECK_FALSE(parse_precondition("foo(Args_in,Args_out,H_in,H_out,EF)", diags));

  diags.clear();
  auto empty = parse_precondition("  % nothing\n", diags);
  REQUIRE(empty);
  CHECK(empty->level1.empty());
}

namespace {

const char* kBigIr = R"(
:- class('K', none, []).
:- method('K.big', ['K', int], int).
'K.big'([r(Th),X],[X],H,H,ok) :-
    X #> 10.
'K.sq'([r(Th),X],[X],H,H,ok) :-
    X*X #= 7.
dead([],[],H,H,ok).
)";

Program parse_ok(const char* text) {
  auto r = parse_ir(text);
  REQUIRE(r.program);
  REQUIRE_FALSE(has_errors(r.diagnostics));
  return *r.program;
}

}  // namespace

TEST_CASE("labeling bounds decide which paths yield cases") {
  Program p = parse_ok(kBigIr);
  SuiteOptions o = opts("block-k:2", AliasMode::Off);
  Suite narrow = generate_suite(p, "K.big", o);
  CHECK(narrow.cases.empty());

  // no integer square is 7, which propagation alone does not see
  Suite sq = generate_suite(p, "K.sq", o);
  CHECK(sq.cases.empty());
  CHECK(sq.ungroundable == 1);

  o.bounds = *parse_bounds("-20..20");
  Suite wide = generate_suite(p, "K.big", o);
  REQUIRE(wide.cases.size() == 1);
  CHECK(wide.cases[0].input_args[1].int_value() == 11);
  CHECK(wide.all_replays_pass());
}

TEST_CASE("reachable instructions follow the call graph") {
  Program p = parse_ok(kBigIr);
  auto reach = reachable_instructions(p, "K.big");
  CHECK(reach.size() == 1);
  CHECK(reachable_instructions(p, "K.sq").size() == 1);
  for (const auto& id : reach) CHECK(id.pred == "K.big");
  CHECK(reachable_instructions(p, "dead").empty());
  Coverage none = measure_coverage({}, p, "K.big");
  CHECK(none.exercised == 0);
  CHECK(none.percent() == 0.0);
}

TEST_CASE("replay rejects corrupted cases") {
  Program p = compile_fixture("sumto.moo");
  Suite s = generate_suite(p, "Rec.sumTo", opts("block-k:2", AliasMode::Off));
  REQUIRE(s.all_replays_pass());
  const TestCase* deep = nullptr;
  for (const auto& tc : s.cases)
    if (tc.trace.size() > 2) deep = &tc;
  REQUIRE(deep);

  TestCase wrong_out = *deep;
  wrong_out.output_args[0] = Term::integer(wrong_out.output_args[0].int_value() + 1);
  auto r1 = replay_ground(wrong_out, p);
  CHECK_FALSE(r1.pass);
  CHECK(r1.diff.find("output") != std::string::npos);

  TestCase wrong_trace = *deep;
  wrong_trace.trace.pop_back();
  CHECK_FALSE(replay_ground(wrong_trace, p).pass);

  TestCase wrong_flag = *deep;
  wrong_flag.exflag = "NPE";
  CHECK_FALSE(replay_ground(wrong_flag, p).pass);

  TestCase wrong_in = *deep;
  wrong_in.input_args[1] = Term::integer(wrong_in.input_args[1].int_value() + 3);
  CHECK_FALSE(replay_ground(wrong_in, p).pass);
}

TEST_CASE("suites on every fixture replay in both aliasing modes") {
  struct Entry {
    const char* file;
    const char* method;
  };
  const Entry entries[] = {{"merge.moo", "SortedList.merge"}, {"arrays.moo", "Arr.sum"}, {"arrays.moo", "Arr.get"},
                           {"arrays.moo", "Arr.fill"},       {"arrays.moo", "Arr.avg"}, {"dispatch.moo", "A.m"},
                           {"sumto.moo", "Rec.sumTo"},       {"sumto.moo", "Rec.fact"},
                           {"misc.moo", "Node.count"},       {"misc.moo", "Node.push"}, {"misc.moo", "Node.bump"}};
  for (const auto& e : entries) {
    Program p = compile_fixture(e.file);
    for (const char* crit : {"block-k:1", "block-k:2", "depth-k:8"}) {
      std::set<std::string> off_traces;
      for (AliasMode alias : {AliasMode::Off, AliasMode::On}) {
        std::string where = std::string(e.method) + " " + crit;
        CAPTURE(where);
        Suite s = generate_suite(p, e.method, opts(crit, alias));
        CHECK(s.replays.size() == s.cases.size());
        for (std::size_t i = 0; i < s.replays.size(); ++i) {
          CAPTURE(i);
          CAPTURE(s.replays[i].diff);
          CHECK(s.replays[i].pass);
        }
        auto traces = trace_set(s);
        if (alias == AliasMode::Off) {
          off_traces = traces;
        } else {
          for (const auto& t : off_traces) CHECK(traces.count(t));
        }
      }
    }
  }
}

TEST_CASE("coverage grows with the criterion") {
  struct Entry {
    const char* file;
    const char* method;
  };
  for (const Entry& e : {Entry{"merge.moo", "SortedList.merge"}, Entry{"arrays.moo", "Arr.sum"},
                         Entry{"sumto.moo", "Rec.sumTo"}}) {
    Program p = compile_fixture(e.file);
    std::size_t prev = 0;
    for (int k = 1; k <= 3; ++k) {
      Suite s = generate_suite(p, e.method, opts("block-k:" + std::to_string(k), AliasMode::Off));
      CHECK(s.coverage.exercised >= prev);
      prev = s.coverage.exercised;
    }
  }
  Program p = compile_fixture("sumto.moo");
  Suite small = generate_suite(p, "Rec.sumTo", opts("depth-k:2", AliasMode::Off));
  Suite large = generate_suite(p, "Rec.sumTo", opts("depth-k:20", AliasMode::Off));
  CHECK(small.coverage.exercised < large.coverage.exercised);
  CHECK(large.coverage.percent() == 100.0);
}

TEST_CASE("json report") {
  Program p = compile_fixture("merge.moo");
  Suite s = generate_suite(p, "SortedList.merge", opts("block-k:2", AliasMode::Off));
  auto j = nlohmann::json::parse(suite_to_json(s));
  CHECK(j["schema"] == 1);
  CHECK(j["criterion"] == "block-k:2");
  CHECK(j["aliasing"] == "off");
  REQUIRE(j["cases"].size() == s.cases.size());
  int exc = 0;
  for (const auto& c : j["cases"]) {
    if (c["exflag"] == "exc(NPE)") {
      ++exc;
      CHECK(c["output"].is_null());
    } else {
      CHECK(c["exflag"] == "ok");
      CHECK(c["output"]["heap"].is_array());
    }
    for (const auto& loc : c["input"]["heap"]) {
      CHECK(loc["ref"].is_number_integer());
      CHECK(loc["cell"].is_object());
    }
    CHECK(c["replay"] == "pass");
  }
  CHECK(exc == 3);
  CHECK(j["coverage"]["percent"] == 100.0);
}
