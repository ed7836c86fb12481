#include <cctype>
#include <charconv>

#include "moo_internal.hpp"

namespace tcg::moo {

namespace {

struct Token {
  enum class Kind { Ident, Int, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::int64_t value = 0;
  SourcePos pos;
};

struct SyntaxError {
  SourcePos pos;
  std::string message;
};

std::vector<Token> tokenize(std::string_view src, std::vector<Diagnostic>& diags) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto adv = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static const char* kPuncts[] = {"&&", "||", "==", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ";", ",",
                                  ".",  "=",  "<",  ">",  "+",  "-",  "*", "/", "%", "!"};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') adv(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      SourcePos start{line, col};
      adv(2);
      while (i < src.size() && src.substr(i, 2) != "*/") adv(1);
      if (i >= src.size()) {
        diags.push_back({Diagnostic::Severity::Error, start, "unterminated comment"});
        break;
      }
      adv(2);
      continue;
    }
    Token t;
    t.pos = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Token::Kind::Ident;
      t.text = std::string(src.substr(i, j - i));
      adv(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Token::Kind::Int;
      t.text = std::string(src.substr(i, j - i));
      auto [p, ec] = std::from_chars(src.data() + i, src.data() + j, t.value);
      if (ec != std::errc()) diags.push_back({Diagnostic::Severity::Error, t.pos, "integer literal out of range"});
      adv(j - i);
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts) {
      std::string_view pv(p);
      if (src.substr(i, pv.size()) == pv) {
        t.kind = Token::Kind::Punct;
        t.text = std::string(pv);
        adv(pv.size());
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) {
      diags.push_back({Diagnostic::Severity::Error, t.pos, std::string("unexpected character '") + c + "'"});
      adv(1);
    }
  }
  Token end;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

bool is_keyword(const std::string& s) {
  static const char* kws[] = {"class", "extends", "void", "int", "bool", "boolean", "if", "else", "while",
                              "return", "new", "null", "this", "true", "false"};
  for (const char* k : kws)
    if (s == k) return true;
  return false;
}

bool is_modifier(const std::string& s) {
  return s == "public" || s == "private" || s == "protected" || s == "abstract";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  SourceAst program() {
    SourceAst ast;
    while (!at_end()) ast.classes.push_back(class_decl());
    return ast;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is(std::string_view s, std::size_t k = 0) const {
    const Token& t = peek(k);
    return (t.kind == Token::Kind::Punct || t.kind == Token::Kind::Ident) && t.text == s;
  }
  bool is_ident(std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Ident && !is_keyword(peek(k).text);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError{peek().pos, msg}; }
  std::string describe() const {
    if (at_end()) return "end of input";
    return "'" + peek().text + "'";
  }
  Token next() { return t_[p_ < t_.size() - 1 ? p_++ : p_]; }
  void expect(std::string_view s) {
    if (!is(s)) fail("expected '" + std::string(s) + "' but found " + describe());
    next();
  }
  bool accept(std::string_view s) {
    if (!is(s)) return false;
    next();
    return true;
  }
  std::string ident(const char* what) {
    if (!is_ident()) fail(std::string("expected ") + what + " but found " + describe());
    return next().text;
  }

  ClassDecl class_decl() {
    ClassDecl c;
    c.pos = peek().pos;
    expect("class");
    c.name = ident("class name");
    if (accept("extends")) c.super = ident("superclass name");
    expect("{");
    while (!is("}")) {
      if (at_end()) fail("unterminated class body");
      member(c);
    }
    expect("}");
    return c;
  }

  bool starts_type(std::size_t k = 0) const {
    return is("int", k) || is("bool", k) || is("boolean", k) || is_ident(k);
  }

  Term type() {
    Term base;
    if (accept("int"))
      base = Term::atom("int");
    else if (accept("bool") || accept("boolean"))
      base = Term::atom("bool");
    else
      base = Term::atom(ident("type"));
    while (is("[") && is("]", 1)) {
      next();
      next();
      base = Term::compound("array", {base});
    }
    return base;
  }

  void member(ClassDecl& c) {
    while (peek().kind == Token::Kind::Ident && is_modifier(peek().text)) next();
    SourcePos pos = peek().pos;
    std::optional<Term> t;
    if (!accept("void")) t = type();
    std::string name = ident("member name");
    if (accept("(")) {
      MethodDecl m;
      m.name = name;
      m.cls = c.name;
      m.ret = t;
      m.pos = pos;
      if (!is(")")) {
        do {
          Term pt = type();
          m.params.emplace_back(ident("parameter name"), pt);
        } while (accept(","));
      }
      expect(")");
      if (!accept(";")) m.body = block();
      c.methods.push_back(std::move(m));
      return;
    }
    if (!t) fail("field cannot have type void");
    c.fields.push_back({name, *t, pos});
    while (accept(",")) {
      SourcePos fp = peek().pos;
      c.fields.push_back({ident("field name"), *t, fp});
    }
    expect(";");
  }

  StmtPtr block() {
    auto b = std::make_unique<Stmt>();
    b->kind = Stmt::Kind::Block;
    b->pos = peek().pos;
    expect("{");
    while (!is("}")) {
      if (at_end()) fail("unterminated block");
      statement_into(b->body);
    }
    expect("}");
    return b;
  }

  // Statement in a position that needs exactly one statement.
  StmtPtr single_as_block() {
    if (is("{")) return block();
    auto b = std::make_unique<Stmt>();
    b->kind = Stmt::Kind::Block;
    b->pos = peek().pos;
    statement_into(b->body);
    return b;
  }

  bool starts_decl() const {
    if (is("int") || is("bool") || is("boolean")) return true;
    if (!is_ident()) return false;
    if (is_ident(1)) return true;
    return is("[", 1) && is("]", 2);
  }

  void statement_into(std::vector<StmtPtr>& out) {
    SourcePos pos = peek().pos;
    if (is("{")) {
      out.push_back(block());
      return;
    }
    if (accept("if")) {
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::If;
      s->pos = pos;
      expect("(");
      s->expr = expr();
      expect(")");
      s->then_s = single_as_block();
      if (accept("else")) s->else_s = single_as_block();
      out.push_back(std::move(s));
      return;
    }
    if (accept("while")) {
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::While;
      s->pos = pos;
      expect("(");
      s->expr = expr();
      expect(")");
      s->loop_body = single_as_block();
      out.push_back(std::move(s));
      return;
    }
    if (accept("return")) {
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::Return;
      s->pos = pos;
      if (!is(";")) s->expr = expr();
      expect(";");
      out.push_back(std::move(s));
      return;
    }
    if (starts_decl()) {
      Term t = type();
      do {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Decl;
        s->pos = peek().pos;
        s->type = t;
        s->name = ident("variable name");
        if (accept("=")) s->expr = expr();
        out.push_back(std::move(s));
      } while (accept(","));
      expect(";");
      return;
    }
    auto e = expr();
    auto s = std::make_unique<Stmt>();
    s->pos = pos;
    if (accept("=")) {
      if (e->kind != Expr::Kind::Name && e->kind != Expr::Kind::Field && e->kind != Expr::Kind::Index)
        throw SyntaxError{e->pos, "invalid assignment target"};
      s->kind = Stmt::Kind::Assign;
      s->lhs = std::move(e);
      s->expr = expr();
    } else {
      s->kind = Stmt::Kind::Expr;
      s->expr = std::move(e);
    }
    expect(";");
    out.push_back(std::move(s));
  }

  static ExprPtr make(Expr::Kind k, SourcePos pos) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->pos = pos;
    return e;
  }

  ExprPtr binary(ExprPtr l, const Token& op, ExprPtr r) {
    auto e = make(Expr::Kind::Binary, op.pos);
    e->op = op.text;
    e->kids.push_back(std::move(l));
    e->kids.push_back(std::move(r));
    return e;
  }

  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    auto l = and_expr();
    while (is("||")) {
      Token op = next();
      l = binary(std::move(l), op, and_expr());
    }
    return l;
  }
  ExprPtr and_expr() {
    auto l = eq_expr();
    while (is("&&")) {
      Token op = next();
      l = binary(std::move(l), op, eq_expr());
    }
    return l;
  }
  ExprPtr eq_expr() {
    auto l = rel_expr();
    while (is("==") || is("!=")) {
      Token op = next();
      l = binary(std::move(l), op, rel_expr());
    }
    return l;
  }
  ExprPtr rel_expr() {
    auto l = add_expr();
    while (is("<") || is("<=") || is(">") || is(">=")) {
      Token op = next();
      l = binary(std::move(l), op, add_expr());
    }
    return l;
  }
  ExprPtr add_expr() {
    auto l = mul_expr();
    while (is("+") || is("-")) {
      Token op = next();
      l = binary(std::move(l), op, mul_expr());
    }
    return l;
  }
  ExprPtr mul_expr() {
    auto l = unary();
    while (is("*") || is("/") || is("%")) {
      Token op = next();
      l = binary(std::move(l), op, unary());
    }
    return l;
  }
  ExprPtr unary() {
    if (is("-") || is("!")) {
      Token op = next();
      auto e = make(Expr::Kind::Unary, op.pos);
      e->op = op.text;
      e->kids.push_back(unary());
      return e;
    }
    return postfix(primary());
  }

  std::vector<ExprPtr> call_args() {
    std::vector<ExprPtr> args;
    expect("(");
    if (!is(")")) {
      do args.push_back(expr());
      while (accept(","));
    }
    expect(")");
    return args;
  }

  ExprPtr postfix(ExprPtr e) {
    for (;;) {
      if (is(".")) {
        SourcePos pos = next().pos;
        std::string name = ident("member name");
        if (is("(")) {
          auto c = make(Expr::Kind::Call, pos);
          c->name = name;
          c->kids.push_back(std::move(e));
          for (auto& a : call_args()) c->kids.push_back(std::move(a));
          e = std::move(c);
        } else {
          auto f = make(Expr::Kind::Field, pos);
          f->name = name;
          f->kids.push_back(std::move(e));
          e = std::move(f);
        }
      } else if (is("[")) {
        SourcePos pos = next().pos;
        auto ix = make(Expr::Kind::Index, pos);
        ix->kids.push_back(std::move(e));
        ix->kids.push_back(expr());
        expect("]");
        e = std::move(ix);
      } else {
        return e;
      }
    }
  }

  ExprPtr primary() {
    const Token& t = peek();
    SourcePos pos = t.pos;
    if (t.kind == Token::Kind::Int) {
      auto e = make(Expr::Kind::IntLit, pos);
      e->value = next().value;
      return e;
    }
    if (accept("true") || accept("false")) {
      auto e = make(Expr::Kind::BoolLit, pos);
      e->value = t_[p_ - 1].text == "true";
      return e;
    }
    if (accept("null")) return make(Expr::Kind::Null, pos);
    if (accept("this")) return make(Expr::Kind::This, pos);
    if (accept("(")) {
      auto e = expr();
      expect(")");
      return e;
    }
    if (accept("new")) {
      if (is_ident() && is("(", 1)) {
        auto e = make(Expr::Kind::New, pos);
        e->name = next().text;
        expect("(");
        expect(")");
        return e;
      }
      Term base;
      if (accept("int"))
        base = Term::atom("int");
      else if (accept("bool") || accept("boolean"))
        base = Term::atom("bool");
      else
        base = Term::atom(ident("class name"));
      auto e = make(Expr::Kind::NewArray, pos);
      expect("[");
      e->kids.push_back(expr());
      expect("]");
      while (is("[") && is("]", 1)) {
        next();
        next();
        base = Term::compound("array", {base});
      }
      e->elem_type = base;
      return e;
    }
    if (is_ident()) {
      std::string name = next().text;
      if (is("(")) {
        auto c = make(Expr::Kind::Call, pos);
        c->name = name;
        c->kids.push_back(nullptr);
        for (auto& a : call_args()) c->kids.push_back(std::move(a));
        return c;
      }
      auto e = make(Expr::Kind::Name, pos);
      e->name = name;
      return e;
    }
    fail("expected an expression but found " + describe());
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
};

}  // namespace

std::optional<SourceAst> parse_syntax(std::string_view text, std::vector<Diagnostic>& diags) {
  auto toks = tokenize(text, diags);
  if (has_errors(diags)) return std::nullopt;
  try {
    return Parser(std::move(toks)).program();
  } catch (const SyntaxError& e) {
    diags.push_back({Diagnostic::Severity::Error, e.pos, e.message});
    return std::nullopt;
  }
}

ParseSourceResult parse_source(std::string_view text) {
  ParseSourceResult r;
  auto ast = parse_syntax(text, r.diagnostics);
  if (!ast) return r;
  check(*ast, r.diagnostics);
  if (!has_errors(r.diagnostics)) r.ast = std::move(ast);
  return r;
}

}  // namespace tcg::moo
