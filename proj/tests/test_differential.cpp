#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ref_interp.hpp"
#include "tcg/harness.hpp"

using namespace tcg;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(TCG_FIXTURES) + "/" + name);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Ground {
  std::size_t successes = 0;
  std::string flag;  // "ok" or the exception class
  std::int64_t exc_ref = -1;
  std::vector<Term> out;
  std::map<std::int64_t, Term> heap;
};

Ground run_ir(const Program& prog, const std::string& pred, const refi::Input& in) {
  Ground g;
  Store s;
  Engine e(prog, {ExecMode::Ground, AliasMode::Off, {Criterion::Kind::DepthK, 1000000}, true, false});
  EntryGoal eg = e.make_entry(s, pred);
  REQUIRE(s.unify(eg.args_in, Term::list(in.args)));
  REQUIRE(s.unify(eg.h_in, refi::heap_term(in.heap)));
  for (const auto& r : e.unfold(s, eg.atom, {eg.call})) {
    if (r.stop != StopReason::Success) continue;
    if (++g.successes > 1) continue;
    Term ef = r.store.resolve(r.root.arg(4));
    g.heap = heap_map(r.store.resolve(r.root.arg(3)));
    if (ef.is_atom("ok")) {
      g.flag = "ok";
      list_items(r.store.resolve(r.root.arg(1)), g.out);
    } else if (ef.is_compound("exc", 1) && ef.arg(0).is_int()) {
      g.exc_ref = ef.arg(0).int_value();
      auto it = g.heap.find(g.exc_ref);
      g.flag = it == g.heap.end() ? "?" : it->second.arg(0).name();
    }
  }
  return g;
}

// Compiled IR and the tree-walker agree on random inputs.
void differential(const std::string& fixture, int runs, unsigned seed) {
  std::string text = slurp(fixture);
  auto parsed = moo::parse_source(text);
  REQUIRE(parsed.ast);
  auto compiled = moo::compile_source(text);
  REQUIRE(compiled.program);
  const moo::SourceAst& ast = *parsed.ast;
  std::mt19937 rng(seed);
  int total = 0;
  for (const auto& cls : ast.classes)
    for (const auto& m : cls.methods) {
      if (!m.body) continue;
      int compared = 0, exceptional = 0;
      for (int i = 0; i < runs; ++i) {
        refi::Input in = refi::random_input(ast, m, rng);
        refi::Outcome want = refi::run(ast, m, in.args, in.heap);
        if (want.aborted) continue;
        Ground got = run_ir(*compiled.program, m.pred(), in);
        std::string where = m.pred() + " run " + std::to_string(i) + " input " + to_string(Term::list(in.args)) +
                            " " + to_string(refi::heap_term(in.heap));
        CAPTURE(where);
        REQUIRE(got.successes == 1);
        ++compared;
        if (!want.exc.empty()) {
          ++exceptional;
          CHECK(got.flag == want.exc);
          CHECK(got.exc_ref == want.exc_ref);
        } else {
          CHECK(got.flag == "ok");
          if (want.ret) {
            REQUIRE(got.out.size() == 1);
            CHECK(to_string(got.out[0]) == to_string(*want.ret));
          } else {
            CHECK(got.out.empty());
          }
        }
        auto want_heap = heap_map(refi::heap_term(want.heap));
        REQUIRE(got.heap.size() == want_heap.size());
        for (const auto& [k, cell] : want_heap) {
          REQUIRE(got.heap.count(k));
          CHECK(to_string(got.heap.at(k)) == to_string(cell));
        }
      }
      MESSAGE(m.pred() << ": " << compared << " compared, " << exceptional << " exceptional");
      CHECK(compared >= runs / 2);
      total += compared;
    }
  CHECK(total >= 200);
}

}  // namespace

TEST_CASE("merge agrees with the tree-walker") { differential("merge.moo", 300, 1); }
TEST_CASE("arrays agree with the tree-walker") { differential("arrays.moo", 300, 2); }
TEST_CASE("dispatch agrees with the tree-walker") { differential("dispatch.moo", 300, 3); }
TEST_CASE("recursion agrees with the tree-walker") { differential("sumto.moo", 300, 4); }
TEST_CASE("lists and reference arrays agree with the tree-walker") { differential("misc.moo", 300, 5); }
