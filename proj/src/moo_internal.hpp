#pragma once

#include <map>
#include <set>

#include "tcg/minioo.hpp"

namespace tcg::moo {

std::optional<SourceAst> parse_syntax(std::string_view text, std::vector<Diagnostic>& diags);
/// Resolves names, fills types and slots, builds the class table.
void check(SourceAst& ast, std::vector<Diagnostic>& diags);

// ---- Nullness of reference-valued slots and one-level paths ----------

enum class Nullness { Unknown, Null, NonNull };

struct NullFacts {
  bool bottom = true;  // unreachable
  std::map<int, Nullness> slots;
  std::map<std::pair<int, std::string>, Nullness> paths;  // slot.field
  std::map<int, std::pair<int, std::string>> equal;       // slot == slot'.field

  Nullness of(int slot) const;
  Nullness of_path(int slot, const std::string& f) const;
  bool operator==(const NullFacts&) const = default;
};

NullFacts join(const NullFacts& a, const NullFacts& b);

/// Forward analysis over one method body. Records the facts holding before
/// every statement and at every loop header (after the fixpoint).
class NullnessAnalysis {
 public:
  explicit NullnessAnalysis(const MethodDecl& m);

  const NullFacts& before(const Stmt* s) const;
  const NullFacts& header(const Stmt* w) const;

 private:
  NullFacts stmt(const Stmt& s, NullFacts in);
  NullFacts seq(const std::vector<StmtPtr>& body, NullFacts in);
  void cond(const Expr& c, const NullFacts& in, NullFacts& t, NullFacts& f);
  NullFacts expr(const Expr& e, NullFacts in);
  Nullness value(const Expr& e, const NullFacts& in) const;
  void assign_slot(NullFacts& s, int slot, const Expr& rhs, const NullFacts& before_rhs);

  const MethodDecl& m_;
  std::map<const Stmt*, NullFacts> before_, header_;
  NullFacts empty_;
};

}  // namespace tcg::moo
