#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcg/ir.hpp"

namespace tcg::moo {

// Types are IR type terms: int, bool, 'C', array(T). The null literal has
// the internal type '$null'.
Term null_type();
bool is_ref_type(const Term& t);

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

struct Expr {
  enum class Kind { IntLit, BoolLit, Null, This, Name, Field, Index, Length, Call, New, NewArray, Unary, Binary };
  Kind kind = Kind::IntLit;
  SourcePos pos;
  std::int64_t value = 0;      // IntLit, BoolLit
  std::string name;            // Name, Field (field), Call (method), New (class)
  std::string op;              // Unary, Binary
  std::vector<ExprPtr> kids;   // Field/Length: [obj]; Index: [arr, idx]; Call: [recv or null, args...];
                               // NewArray: [len]; Unary: [e]; Binary: [l, r]
  Term elem_type;              // NewArray

  // Filled by the checker.
  Term type;
  int slot = -1;               // Name bound to a local
  std::string decl_class;      // Field: class declaring the field; Call: static receiver class
};

struct Stmt {
  enum class Kind { Block, Decl, Assign, If, While, Return, Expr };
  Kind kind = Kind::Block;
  SourcePos pos;
  std::vector<StmtPtr> body;   // Block
  std::string name;            // Decl
  Term type;                   // Decl
  ExprPtr lhs;                 // Assign target
  ExprPtr expr;                // Decl init (optional), Assign rhs, If/While cond, Return value, Expr
  StmtPtr then_s, else_s;      // If (blocks; else_s may be null)
  StmtPtr loop_body;           // While (block)
  int slot = -1;               // Decl
};

struct FieldDecl {
  std::string name;
  Term type;
  SourcePos pos;
};

struct MethodDecl {
  std::string name;
  std::string cls;
  std::optional<Term> ret;
  std::vector<std::pair<std::string, Term>> params;
  StmtPtr body;  // null for bodiless (abstract) methods
  SourcePos pos;

  // Filled by the checker: slot 0 is this, then params, then locals.
  std::vector<std::string> local_names;
  std::vector<Term> local_types;

  std::string pred() const { return cls + "." + name; }
};

struct ClassDecl {
  std::string name;
  std::optional<std::string> super;
  std::vector<FieldDecl> fields;
  std::vector<MethodDecl> methods;
  SourcePos pos;
};

struct SourceAst {
  std::vector<ClassDecl> classes;
  ClassTable table;  // filled by the checker

  const ClassDecl* find_class(std::string_view name) const;
  /// Most specific declaration of `method` visible from `cls` (walking up).
  const MethodDecl* resolve_method(const std::string& cls, const std::string& method) const;
};

struct ParseSourceResult {
  std::optional<SourceAst> ast;
  std::vector<Diagnostic> diagnostics;
};

/// Parses and checks a .moo compilation unit.
ParseSourceResult parse_source(std::string_view text);

// ---- Block graph ------------------------------------------------------

/// Per-arm head restriction on a block parameter.
struct Pattern {
  enum class Kind { Ref, Null, Ok, Exc, Same };
  int slot = -1;
  Kind kind = Kind::Ref;
  int other = -1;  // Same
};

/// Instruction over method slots. Operand terms use Var(slot) for slot
/// reads and '$key'(Var(slot)) for the location key of a non-null slot.
struct Instr {
  enum class Op { Copy, Const, Assign, GetField, SetField, New, NewArray, Length, GetArray, SetArray, Call, Compare };
  Op op = Op::Copy;
  int dst = -1;    // Copy/Const/Assign/GetField/New/NewArray/Length/GetArray/Call result
  int ef = -1;     // Call exception flag slot
  Term a, b, c;    // operands; meaning by op
  std::string name;  // class, field signature class, callee predicate
  RelOp rel = RelOp::Eq;
};

struct Terminator {
  enum class Kind { None, Goto, Return, Throw, Rethrow };
  Kind kind = Kind::None;
  int target = -1;
  std::optional<Term> value;  // Return value operand
  std::string cls;            // Throw
  int slot = -1;              // Rethrow
};

struct Arm {
  std::vector<Pattern> patterns;
  std::optional<Instr> guard;  // Compare
  std::optional<std::pair<int, std::string>> type_guard;  // (slot, class)
  std::optional<std::pair<int, int>> ref_neq;             // slots compared with \==
  std::vector<Instr> instrs;
  Terminator term;
  std::string label;  // edge label for display
};

struct Block {
  std::string name;
  std::string kind;             // entry, nullcheck, if, cond, loop, loopcond, loopbody, preloop, join, ...
  std::vector<int> ref_slots;   // slots known non-null at entry (head r(K) patterns)
  std::vector<Arm> arms;
  std::vector<int> params;      // filled by liveness
};

struct MethodCfg {
  const MethodDecl* method = nullptr;
  std::vector<std::string> slot_names;
  std::vector<Term> slot_types;
  std::vector<Block> blocks;  // blocks[0] is the method entry
};

struct Cfg {
  std::vector<MethodCfg> methods;
};

Cfg build_cfg(const SourceAst& ast);
Program lower(const Cfg& cfg, const SourceAst& ast);

/// parse_source + build_cfg + lower.
struct CompileResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};
CompileResult compile_source(std::string_view text);

}  // namespace tcg::moo
