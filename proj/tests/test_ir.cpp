#include <set>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tcg/ir.hpp"

using namespace tcg;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program parse_ok(std::string_view text) {
  auto r = parse_ir(text);
  for (const auto& d : r.diagnostics) INFO(d.str());
  REQUIRE(r.diagnostics.empty());
  REQUIRE(r.program);
  return *r.program;
}

bool mentions(const std::vector<Diagnostic>& ds, std::string_view needle) {
  for (const auto& d : ds)
    if (d.message.find(needle) != std::string::npos) return true;
  return false;
}

const char* kHeader = ":- class('A', none, [field(f, int), field(n, 'A')]).\n";

}  // namespace

TEST_CASE("golden merge fixture parses and validates cleanly") {
  Program p = parse_ok(read_file(std::string(TCG_FIXTURES) + "/merge.ir"));
  auto diags = validate(p);
  for (const auto& d : diags) INFO(d.str());
  CHECK(diags.empty());
  CHECK(p.predicates.size() == 13);

  const Predicate* merge = p.find("SortedList.merge");
  REQUIRE(merge);
  REQUIRE(merge->clauses.size() == 1);
  const Clause& c = merge->clauses[0];
  CHECK_FALSE(c.guard);
  REQUIRE(c.body.size() == 2);
  CHECK(c.body[0].kind == LitKind::GetField);
  CHECK(to_string(c.body[0].args[2]) == "'SortedList':first");
  CHECK(c.body[1].kind == LitKind::Call);
  CHECK(c.body[1].pred == "nullcheck1");

  const Predicate* if1 = p.find("if1");
  REQUIRE(if1);
  REQUIRE(if1->clauses.size() == 2);
  CHECK(if1->clauses[0].guard->op == RelOp::Gt);
  CHECK(if1->clauses[1].guard->op == RelOp::Le);
  CHECK(p.entry("SortedList.merge"));
}

TEST_CASE("round trip: print then parse gives an equal program") {
  Program p = parse_ok(read_file(std::string(TCG_FIXTURES) + "/merge.ir"));
  std::string printed = program_to_string(p);
  Program q = parse_ok(printed);
  CHECK(programs_equal(p, q));
  CHECK(program_to_string(q) == printed);
}

TEST_CASE("body-less clause") {
  Program p = parse_ok("p([],[],H,H,ok).");
  const Predicate* pred = p.find("p");
  REQUIRE(pred);
  REQUIRE(pred->clauses.size() == 1);
  CHECK(pred->clauses[0].body.empty());
  CHECK_FALSE(pred->clauses[0].guard);
  CHECK(validate(p).empty());
}

TEST_CASE("heap threading violations are reported") {
  Program p = parse_ok(std::string(kHeader) +
                       "p([r(X)],[],H0,H2,ok) :- set_field(H0,X,'A':f,1,H1), set_field(H0,X,'A':f,2,H2).");
  CHECK(mentions(validate(p), "heap not threaded linearly"));

  Program q = parse_ok(std::string(kHeader) + "q([r(X)],[],H0,H1,ok) :- set_field(H0,X,'A':f,1,H1).");
  CHECK(validate(q).empty());

  Program r = parse_ok("r([],[],H0,H1,ok).");
  CHECK(mentions(validate(r), "heap not threaded linearly"));
}

TEST_CASE("guard overlap detection") {
  Program p = parse_ok("p([X],[],H,H,ok) :- X #> 0.\np([X],[],H,H,ok) :- X #=< 0.");
  CHECK(validate(p).empty());

  Program q = parse_ok("p([X],[],H,H,ok) :- X #> 0.\np([X],[],H,H,ok) :- X #> 1.");
  auto diags = validate(q);
  REQUIRE(diags.size() == 1);
  CHECK_FALSE(diags[0].is_error());
  CHECK(mentions(diags, "clauses may overlap"));

  Program heads = parse_ok("p([null],[],H,H,ok).\np([r(_)],[],H,H,ok).");
  CHECK(validate(heads).empty());

  Program refs = parse_ok("p([A,B],[],H,H,ok) :- A \\== B.\np([A,A],[],H,H,ok).");
  CHECK(validate(refs).empty());

  Program types = parse_ok(std::string(kHeader) +
                           ":- class('B', 'A', []).\n"
                           "p([r(X)],[],H,H,ok) :- type(H,X,'A').\np([r(X)],[],H,H,ok) :- type(H,X,'B').");
  CHECK(validate(types).empty());
}

TEST_CASE("resolution diagnostics") {
  Program p = parse_ok(std::string(kHeader) + "p([r(X)],[],H,H,ok) :- get_field(H,X,'A':g,V), q([V],[],H,H,ok).");
  auto diags = validate(p);
  CHECK(mentions(diags, "has no field g"));
  CHECK(mentions(diags, "undefined predicate q"));

  Program c = parse_ok(":- class('A', 'Z', []).");
  CHECK(mentions(validate(c), "unknown class Z"));

  Program cyc = parse_ok(":- class('A', 'B', []).\n:- class('B', 'A', []).");
  CHECK(mentions(validate(cyc), "superclass cycle"));

  Program bad_ef = parse_ok("p([],[],H,H,foo).");
  CHECK(mentions(validate(bad_ef), "malformed exception flag"));
}

TEST_CASE("syntax errors are positioned") {
  auto r = parse_ir("p([],[],H,H,ok).\nq([],[],H,H,ok) :- frob(H).\n");
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].pos.line == 2);
  CHECK(r.diagnostics[0].message.find("unknown builtin 'frob/1'") != std::string::npos);
  CHECK_FALSE(r.program);

  auto g = parse_ir("p([],[],H,H,ok) :- get_field(H,X,Y).");
  CHECK(g.diagnostics.size() == 1);

  auto second_guard = parse_ir("p([A],[],H,H,ok) :- A #> 0, A \\== null.");
  CHECK(mentions(second_guard.diagnostics, "guard must be the first literal"));

  auto unterminated = parse_ir("p([],[],H,H,ok)");
  CHECK_FALSE(unterminated.program);
}

TEST_CASE("every literal form is constructible, printable and re-parsable") {
  const char* text =
      ":- class('A', none, [field(f, int), field(a, array(int))]).\n"
      ":- class('B', 'A', []).\n"
      ":- method('A.m', ['A', int], int).\n"
      "'A.m'([r(X),I],[R],H0,H6,EF) :- type(H0,X,'B'),\n"
      "    V #= I * 2 + 1, get_field(H0,X,'A':f,F), set_field(H0,X,'A':f,V,H1),\n"
      "    new_object(H1,'A',Y,H2), new_array(H2,int,3,Z,H3), length(H3,Z,Len),\n"
      "    get_array(H3,Z,0,E), set_array(H3,Z,I mod 2,E - -1,H4), F #>= Len,\n"
      "    q([r(Y)],[R],H4,H5,EF), new_object(H5,'B',_,H6).\n"
      "'A.m'([r(X),I],[0],H,H,ok) :- I #< 0.\n"
      "'A.m'([null,_],[0],H,H,ok) :- I #\\= -(3) / 2.\n"
      "q([A],[A],H,H,ok) :- A \\== null.\n";
  Program p = parse_ok(text);
  std::set<LitKind> kinds;
  for (const auto& pred : p.predicates)
    for (const auto& c : pred.clauses) {
      if (c.guard) kinds.insert(c.guard->kind);
      for (const auto& l : c.body) kinds.insert(l.kind);
    }
  for (LitKind k : {LitKind::Compare, LitKind::RefNeq, LitKind::TypeGuard, LitKind::Assign, LitKind::Call,
                    LitKind::NewObject, LitKind::NewArray, LitKind::Length, LitKind::GetField, LitKind::SetField,
                    LitKind::GetArray, LitKind::SetArray})
    CHECK(kinds.count(k) == 1);
  Program q = parse_ok(program_to_string(p));
  CHECK(programs_equal(p, q));
  auto diags = validate(p);
  CHECK_FALSE(has_errors(diags));

  std::vector<std::string> names;
  std::vector<Diagnostic> ds;
  auto goal = parse_goal("Args_in = [r(Th),L], member(L,[null,r(Lp)]), Th #\\= Lp, noshare(Th,L), acyclic(Th)",
                         names, ds);
  REQUIRE(goal);
  REQUIRE(goal->size() == 5);
  CHECK((*goal)[0].kind == LitKind::Unify);
  CHECK((*goal)[1].kind == LitKind::Member);
  CHECK((*goal)[2].kind == LitKind::Compare);
  CHECK((*goal)[3].kind == LitKind::NoShare);
  CHECK((*goal)[4].kind == LitKind::Acyclic);
  CHECK(names[0] == "Args_in");
}

TEST_CASE("class table queries") {
  Program p = parse_ok(
      ":- class('A', none, [field(f, int)]).\n"
      ":- class('B', 'A', [field(g, int)]).\n"
      ":- class('C', 'B', []).\n"
      ":- class('D', 'A', []).\n");
  const auto& ct = p.classes;
  CHECK(ct.is_subclass("C", "A"));
  CHECK(ct.is_subclass("B", "B"));
  CHECK_FALSE(ct.is_subclass("A", "B"));
  CHECK(ct.subclasses_of("A") == std::vector<std::string>{"A", "B", "C", "D"});
  CHECK(ct.subclasses_of("B") == std::vector<std::string>{"B", "C"});
  auto fs = ct.all_fields("C");
  REQUIRE(fs.size() == 2);
  CHECK(fs[0].name == "f");
  CHECK(fs[1].name == "g");
  CHECK(ct.lookup_field("C", "f"));
  CHECK_FALSE(ct.lookup_field("A", "g"));
  CHECK(ct.has("NPE"));
}
