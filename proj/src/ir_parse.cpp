#include <cctype>
#include <stdexcept>

#include "tcg/ir.hpp"

namespace tcg {

namespace {

enum class Tok { Var, Atom, Int, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  bool quoted = false;
  SourcePos pos;
};

struct ParseError : std::runtime_error {
  SourcePos pos;
  ParseError(SourcePos p, const std::string& msg) : std::runtime_error(msg), pos(p) {}
};

const char* const kOps[] = {":-", "#>=", "#=<", "#\\=", "\\==", "#>", "#<", "#=", "=", "+", "-", "*",
                            "/",  ":",   "(",   ")",    "[",    "]",  "|",  ",",  "."};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '%') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    SourcePos pos{line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      Token t{Tok::Int, std::string(src.substr(i, j - i)), 0, false, pos};
      try {
        t.value = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        throw ParseError(pos, "integer literal out of range");
      }
      out.push_back(t);
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      bool is_var = std::isupper(static_cast<unsigned char>(c)) || c == '_';
      if (is_var)
        while (j < src.size() && src[j] == '\'') ++j;
      out.push_back({is_var ? Tok::Var : Tok::Atom, std::string(src.substr(i, j - i)), 0, false, pos});
      advance(j - i);
      continue;
    }
    if (c == '\'') {
      std::string text;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= src.size() || src[j] == '\n') throw ParseError(pos, "unterminated quoted atom");
        if (src[j] == '\\' && j + 1 < src.size()) {
          text += src[j + 1];
          j += 2;
          continue;
        }
        if (src[j] == '\'') break;
        text += src[j++];
      }
      out.push_back({Tok::Atom, text, 0, true, pos});
      advance(j + 1 - i);
      continue;
    }
    bool matched = false;
    for (const char* op : kOps) {
      std::string_view o(op);
      if (src.substr(i, o.size()) == o) {
        out.push_back({Tok::Punct, std::string(o), 0, false, pos});
        advance(o.size());
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError(pos, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", 0, false, {line, col}});
  return out;
}

bool is_arith(const Term& t) {
  if (t.is_compound("-", 1)) return true;
  if (t.kind() != TermKind::Compound || t.arity() != 2) return false;
  const auto& f = t.name();
  return f == "+" || f == "-" || f == "*" || f == "/" || f == "mod";
}

struct BuiltinSig {
  const char* name;
  std::size_t arity;
  LitKind kind;
};

const BuiltinSig kBuiltins[] = {
    {"type", 3, LitKind::TypeGuard},    {"new_object", 4, LitKind::NewObject}, {"new_array", 5, LitKind::NewArray},
    {"length", 3, LitKind::Length},     {"get_field", 4, LitKind::GetField},   {"set_field", 5, LitKind::SetField},
    {"get_array", 4, LitKind::GetArray}, {"set_array", 5, LitKind::SetArray},   {"member", 2, LitKind::Member},
    {"noshare", 2, LitKind::NoShare},   {"acyclic", 1, LitKind::Acyclic},
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags) : toks_(std::move(toks)), diags_(diags) {}

  std::vector<std::string>* names = nullptr;

  const Token& peek() const { return toks_[pos_]; }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }

  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }

  void expect(std::string_view p) {
    if (!is_punct(p)) throw ParseError(peek().pos, "expected '" + std::string(p) + "' but found " + describe(peek()));
    next();
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "end of input";
    return "'" + t.text + "'";
  }

  void skip_sentence() {
    while (!at_end() && !is_punct(".")) next();
    if (is_punct(".")) next();
  }

  Term var_term(const std::string& name) {
    if (name == "_") {
      names->push_back("_");
      return Term::var(static_cast<VarId>(names->size() - 1));
    }
    for (std::size_t i = 0; i < names->size(); ++i)
      if ((*names)[i] == name) return Term::var(static_cast<VarId>(i));
    names->push_back(name);
    return Term::var(static_cast<VarId>(names->size() - 1));
  }

  Term primary() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Int:
        return Term::integer(t.value);
      case Tok::Var:
        return var_term(t.text);
      case Tok::Atom: {
        std::string name = t.text;
        bool quoted = t.quoted;
        if (is_punct("(")) {
          next();
          std::vector<Term> args;
          args.push_back(expr());
          while (is_punct(",")) {
            next();
            args.push_back(expr());
          }
          expect(")");
          if (!quoted && name == "r" && args.size() == 1) return Term::ref(args[0]);
          return Term::compound(name, std::move(args));
        }
        if (!quoted && name == "null") return Term::null();
        return Term::atom(name);
      }
      case Tok::Punct:
        if (t.text == "(") {
          Term e = expr();
          expect(")");
          return e;
        }
        if (t.text == "[") {
          if (is_punct("]")) {
            next();
            return Term::nil();
          }
          std::vector<Term> items;
          items.push_back(expr());
          while (is_punct(",")) {
            next();
            items.push_back(expr());
          }
          Term tail = Term::nil();
          if (is_punct("|")) {
            next();
            tail = expr();
          }
          expect("]");
          return Term::list(items, tail);
        }
        break;
      case Tok::End:
        break;
    }
    throw ParseError(t.pos, "unexpected " + describe(t));
  }

  Term colon() {
    Term a = primary();
    if (is_punct(":")) {
      next();
      Term b = primary();
      return Term::compound(":", {a, b});
    }
    return a;
  }

  Term unary() {
    if (is_punct("-")) {
      next();
      if (peek().kind == Tok::Int) return Term::integer(-next().value);
      return Term::compound("-", {unary()});
    }
    return colon();
  }

  Term mult() {
    Term a = unary();
    for (;;) {
      if (is_punct("*") || is_punct("/")) {
        std::string op = next().text;
        a = Term::compound(op, {a, unary()});
      } else if (peek().kind == Tok::Atom && !peek().quoted && peek().text == "mod") {
        next();
        a = Term::compound("mod", {a, unary()});
      } else {
        return a;
      }
    }
  }

  Term expr() {
    Term a = mult();
    while (is_punct("+") || is_punct("-")) {
      std::string op = next().text;
      a = Term::compound(op, {a, mult()});
    }
    return a;
  }

  Literal literal() {
    SourcePos pos = peek().pos;
    Term lhs = expr();
    Literal l;
    l.pos = pos;
    if (peek().kind == Tok::Punct) {
      const std::string& p = peek().text;
      if (auto op = relop_from_symbol(p)) {
        next();
        Term rhs = expr();
        l.op = *op;
        l.kind = (*op == RelOp::Eq && lhs.is_var() && is_arith(rhs)) ? LitKind::Assign : LitKind::Compare;
        l.args = {lhs, rhs};
        return l;
      }
      if (p == "=" || p == "\\==") {
        next();
        l.kind = p == "=" ? LitKind::Unify : LitKind::RefNeq;
        l.args = {lhs, expr()};
        return l;
      }
    }
    if (lhs.kind() != TermKind::Atom && lhs.kind() != TermKind::Compound)
      throw ParseError(pos, "expected a literal, found " + to_string(lhs, names));
    const std::string& name = lhs.name();
    std::vector<Term> args(lhs.args().begin(), lhs.args().end());
    for (const auto& b : kBuiltins) {
      if (name != b.name) continue;
      if (args.size() != b.arity)
        throw ParseError(pos, "builtin " + name + " expects " + std::to_string(b.arity) + " arguments");
      l.kind = b.kind;
      l.args = std::move(args);
      return l;
    }
    if (args.size() != 5)
      throw ParseError(pos, "unknown builtin '" + name + "/" + std::to_string(args.size()) + "'");
    l.kind = LitKind::Call;
    l.pred = name;
    l.args = std::move(args);
    return l;
  }

  std::vector<Literal> goal() {
    std::vector<Literal> out;
    out.push_back(literal());
    while (is_punct(",")) {
      next();
      out.push_back(literal());
    }
    return out;
  }

  Term type_term(const Term& t, SourcePos pos) {
    if (t.is_atom()) return t;
    if (t.is_compound("array", 1)) {
      type_term(t.arg(0), pos);
      return t;
    }
    throw ParseError(pos, "malformed type " + to_string(t));
  }

  void directive(Program& prog) {
    SourcePos pos = peek().pos;
    std::vector<std::string> scratch;
    names = &scratch;
    Term d = expr();
    expect(".");
    if (d.is_compound("class", 3)) {
      ClassInfo c;
      if (!d.arg(0).is_atom()) throw ParseError(pos, "class name must be an atom");
      c.name = d.arg(0).name();
      if (!d.arg(1).is_atom()) throw ParseError(pos, "superclass must be an atom");
      if (!d.arg(1).is_atom("none")) c.super = d.arg(1).name();
      std::vector<Term> fields;
      if (!list_items(d.arg(2), fields)) throw ParseError(pos, "field list must be a proper list");
      for (const auto& f : fields) {
        if (!f.is_compound("field", 2) || !f.arg(0).is_atom()) throw ParseError(pos, "malformed field declaration");
        c.fields.push_back({f.arg(0).name(), type_term(f.arg(1), pos)});
      }
      prog.classes.add(std::move(c));
      return;
    }
    if (d.is_compound("method", 3)) {
      MethodInfo m;
      if (!d.arg(0).is_atom()) throw ParseError(pos, "method name must be an atom");
      m.pred = d.arg(0).name();
      auto dot = m.pred.rfind('.');
      if (dot == std::string::npos) throw ParseError(pos, "method name must be Class.method");
      m.cls = m.pred.substr(0, dot);
      m.name = m.pred.substr(dot + 1);
      std::vector<Term> types;
      if (!list_items(d.arg(1), types)) throw ParseError(pos, "parameter types must be a proper list");
      for (const auto& t : types) m.param_types.push_back(type_term(t, pos));
      if (!d.arg(2).is_atom("void")) m.ret_type = type_term(d.arg(2), pos);
      prog.entries.push_back(std::move(m));
      return;
    }
    throw ParseError(pos, "unknown directive " + to_string(d));
  }

  void clause(Program& prog) {
    Clause c;
    c.pos = peek().pos;
    names = &c.var_names;
    Term head = primary();
    if (head.kind() != TermKind::Compound || head.arity() != 5)
      throw ParseError(c.pos, "clause head must have the form Pred(ArgsIn,ArgsOut,Hin,Hout,ExFlag)");
    c.args_in = head.arg(0);
    c.args_out = head.arg(1);
    c.h_in = head.arg(2);
    c.h_out = head.arg(3);
    c.exflag = head.arg(4);
    if (is_punct(":-")) {
      next();
      auto lits = goal();
      for (std::size_t i = 0; i < lits.size(); ++i) {
        if (i == 0 && lits[i].is_guard_kind()) {
          c.guard = std::move(lits[i]);
          continue;
        }
        if (lits[i].kind == LitKind::RefNeq || lits[i].kind == LitKind::TypeGuard)
          throw ParseError(lits[i].pos, "guard must be the first literal of a clause");
        c.body.push_back(std::move(lits[i]));
      }
    }
    expect(".");
    prog.get_or_add(head.name()).clauses.push_back(std::move(c));
  }

  Program program() {
    Program prog;
    while (!at_end()) {
      try {
        if (is_punct(":-")) {
          next();
          directive(prog);
        } else {
          clause(prog);
        }
      } catch (const ParseError& e) {
        diags_.push_back({Diagnostic::Severity::Error, e.pos, e.what()});
        skip_sentence();
      }
    }
    return prog;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic>& diags_;
};

}  // namespace

ParseResult parse_ir(std::string_view text) {
  ParseResult r;
  std::vector<Token> toks;
  try {
    toks = tokenize(text);
  } catch (const ParseError& e) {
    r.diagnostics.push_back({Diagnostic::Severity::Error, e.pos, e.what()});
    return r;
  }
  Parser p(std::move(toks), r.diagnostics);
  Program prog = p.program();
  if (!has_errors(r.diagnostics)) r.program = std::move(prog);
  return r;
}

std::optional<std::vector<Literal>> parse_goal(std::string_view text, std::vector<std::string>& names,
                                               std::vector<Diagnostic>& diags) {
  try {
    Parser p(tokenize(text), diags);
    p.names = &names;
    if (p.at_end()) return std::vector<Literal>{};
    auto lits = p.goal();
    if (p.is_punct(".")) p.next();
    if (!p.at_end()) throw ParseError(p.peek().pos, "unexpected " + Parser::describe(p.peek()));
    return lits;
  } catch (const ParseError& e) {
    diags.push_back({Diagnostic::Severity::Error, e.pos, e.what()});
    return std::nullopt;
  }
}

}  // namespace tcg
