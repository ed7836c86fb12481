#include "tcg/term.hpp"

#include <cctype>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tcg {

struct Term::Node {
  TermKind kind;
  std::int64_t value = 0;
  std::string name;
  std::vector<Term> args;
};

namespace {


bool is_arith_functor(const std::string& f, std::size_t arity) {
  return arity == 2 && (f == "+" || f == "-" || f == "*" || f == "/" || f == "mod");
}

}  // namespace

Term::Term() : node_(nullptr) {}
Term::Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Term Term::var(VarId id) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Var;
  n->value = id;
  return Term(std::move(n));
}

Term Term::integer(std::int64_t value) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Int;
  n->value = value;
  return Term(std::move(n));
}

Term Term::null() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Null;
    return std::shared_ptr<const Node>(n);
  }();
  return Term(node);
}

Term Term::ref(Term inner) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Ref;
  n->args.push_back(std::move(inner));
  return Term(std::move(n));
}

Term Term::atom(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Atom;
  n->name = std::move(name);
  return Term(std::move(n));
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return atom(std::move(functor));
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Compound;
  n->name = std::move(functor);
  n->args = std::move(args);
  return Term(std::move(n));
}

Term Term::cons(Term head, Term tail) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Cons;
  n->args.push_back(std::move(head));
  n->args.push_back(std::move(tail));
  return Term(std::move(n));
}

Term Term::nil() { return Term(); }

Term Term::list(const std::vector<Term>& items, Term tail) {
  Term out = std::move(tail);
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = cons(*it, out);
  return out;
}

TermKind Term::kind() const { return node_ ? node_->kind : TermKind::Nil; }

bool Term::is_atom(std::string_view name) const { return is_atom() && node_->name == name; }

bool Term::is_compound(std::string_view functor, std::size_t arity) const {
  return kind() == TermKind::Compound && node_->name == functor && node_->args.size() == arity;
}

VarId Term::var_id() const {
  if (kind() != TermKind::Var) throw std::logic_error("var_id on non-variable");
  return node_->value;
}

std::int64_t Term::int_value() const {
  if (kind() != TermKind::Int) throw std::logic_error("int_value on non-integer");
  return node_->value;
}

const std::string& Term::name() const {
  static const std::string empty;
  return node_ ? node_->name : empty;
}

std::span<const Term> Term::args() const {
  if (!node_) return {};
  return {node_->args.data(), node_->args.size()};
}

bool Term::identical(const Term& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case TermKind::Var:
    case TermKind::Int:
      return node_->value == other.node_->value;
    case TermKind::Null:
    case TermKind::Nil:
      return true;
    case TermKind::Atom:
      return node_->name == other.node_->name;
    case TermKind::Compound:
      if (node_->name != other.node_->name) return false;
      [[fallthrough]];
    case TermKind::Ref:
    case TermKind::Cons: {
      auto a = args();
      auto b = other.args();
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].identical(b[i])) return false;
      return true;
    }
  }
  return false;
}

bool atom_needs_quotes(std::string_view name) {
  if (name.empty()) return true;
  if (!std::islower(static_cast<unsigned char>(name[0]))) return true;
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return true;
  return name == "null" || name == "mod" || name == "r";
}

namespace {

void print_atom(std::ostream& os, const std::string& name) {
  if (!atom_needs_quotes(name)) {
    os << name;
    return;
  }
  os << '\'';
  for (char c : name) {
    if (c == '\'' || c == '\\') os << '\\';
    os << c;
  }
  os << '\'';
}

bool is_infix(const Term& t) {
  return t.kind() == TermKind::Compound &&
         (is_arith_functor(t.name(), t.arity()) || (t.name() == ":" && t.arity() == 2));
}

void print_rec(std::ostream& os, const Term& t, const std::vector<std::string>* names);

void print_operand(std::ostream& os, const Term& t, const std::vector<std::string>* names) {
  if (is_infix(t)) {
    os << '(';
    print_rec(os, t, names);
    os << ')';
  } else {
    print_rec(os, t, names);
  }
}

void print_rec(std::ostream& os, const Term& t, const std::vector<std::string>* names) {
  switch (t.kind()) {
    case TermKind::Var: {
      auto id = t.var_id();
      if (names && id >= 0 && static_cast<std::size_t>(id) < names->size() && !(*names)[id].empty())
        os << (*names)[id];
      else
        os << "_G" << id;
      return;
    }
    case TermKind::Int:
      os << t.int_value();
      return;
    case TermKind::Null:
      os << "null";
      return;
    case TermKind::Nil:
      os << "[]";
      return;
    case TermKind::Atom:
      print_atom(os, t.name());
      return;
    case TermKind::Ref:
      os << "r(";
      print_rec(os, t.arg(0), names);
      os << ')';
      return;
    case TermKind::Cons: {
      os << '[';
      Term cur = t;
      bool first = true;
      while (cur.kind() == TermKind::Cons) {
        if (!first) os << ',';
        first = false;
        print_rec(os, cur.arg(0), names);
        cur = cur.arg(1);
      }
      if (cur.kind() != TermKind::Nil) {
        os << '|';
        print_rec(os, cur, names);
      }
      os << ']';
      return;
    }
    case TermKind::Compound: {
      const auto& f = t.name();
      if (is_infix(t)) {
        print_operand(os, t.arg(0), names);
        if (f == ":")
          os << ':';
        else
          os << ' ' << f << ' ';
        print_operand(os, t.arg(1), names);
        return;
      }
      if (f == "," && t.arity() == 2) {
        os << '(';
        print_rec(os, t.arg(0), names);
        os << ',';
        print_rec(os, t.arg(1), names);
        os << ')';
        return;
      }
      if (f == "-" && t.arity() == 1) {
        os << "-(";
        print_rec(os, t.arg(0), names);
        os << ')';
        return;
      }
      print_atom(os, f);
      os << '(';
      for (std::size_t i = 0; i < t.arity(); ++i) {
        if (i) os << ',';
        print_rec(os, t.arg(i), names);
      }
      os << ')';
      return;
    }
  }
}

}  // namespace

void print_term(std::ostream& os, const Term& t, const std::vector<std::string>* names) {
  print_rec(os, t, names);
}

std::string to_string(const Term& t, const std::vector<std::string>* names) {
  std::ostringstream os;
  print_rec(os, t, names);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Term& t) {
  print_rec(os, t, nullptr);
  return os;
}

Term shift_vars(const Term& t, VarId offset) {
  switch (t.kind()) {
    case TermKind::Var:
      return Term::var(t.var_id() + offset);
    case TermKind::Int:
    case TermKind::Null:
    case TermKind::Nil:
    case TermKind::Atom:
      return t;
    case TermKind::Ref:
      return Term::ref(shift_vars(t.arg(0), offset));
    case TermKind::Cons:
      return Term::cons(shift_vars(t.arg(0), offset), shift_vars(t.arg(1), offset));
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const auto& a : t.args()) args.push_back(shift_vars(a, offset));
      return Term::compound(t.name(), std::move(args));
    }
  }
  return t;
}

void collect_vars(const Term& t, std::vector<VarId>& out) {
  if (t.is_var()) {
    for (auto v : out)
      if (v == t.var_id()) return;
    out.push_back(t.var_id());
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}

bool list_items(const Term& t, std::vector<Term>& out) {
  Term cur = t;
  while (cur.kind() == TermKind::Cons) {
    out.push_back(cur.arg(0));
    cur = cur.arg(1);
  }
  return cur.kind() == TermKind::Nil;
}

}  // namespace tcg
