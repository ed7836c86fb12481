#include <deque>
#include <sstream>

#include "tcg/harness.hpp"

namespace tcg {

std::map<std::int64_t, Term> heap_map(const Term& heap) {
  std::map<std::int64_t, Term> out;
  std::vector<Term> locs;
  list_items(heap, locs);
  for (const auto& l : locs)
    if (l.is_compound(",", 2) && l.arg(0).is_int()) out.emplace(l.arg(0).int_value(), l.arg(1));
  return out;
}

namespace {

std::optional<std::int64_t> key_of(const Term& v) {
  if (v.kind() == TermKind::Ref && v.arg(0).is_int()) return v.arg(0).int_value();
  if (v.is_int()) return v.int_value();
  return std::nullopt;
}

// References stored directly in a cell.
std::vector<std::int64_t> successors(const Term& cell) {
  std::vector<std::int64_t> out;
  std::vector<Term> items;
  if (cell.is_compound("object", 2)) {
    list_items(cell.arg(1), items);
    for (const auto& f : items)
      if (f.is_compound("field", 2) && f.arg(1).kind() == TermKind::Ref && f.arg(1).arg(0).is_int())
        out.push_back(f.arg(1).arg(0).int_value());
  } else if (cell.is_compound("array", 3)) {
    list_items(cell.arg(2), items);
    for (const auto& e : items)
      if (e.kind() == TermKind::Ref && e.arg(0).is_int()) out.push_back(e.arg(0).int_value());
  }
  return out;
}

}  // namespace

std::set<std::int64_t> reachable(const std::map<std::int64_t, Term>& heap, const Term& from) {
  std::set<std::int64_t> seen;
  auto k = key_of(from);
  if (!k) return seen;
  std::deque<std::int64_t> todo{*k};
  while (!todo.empty()) {
    std::int64_t cur = todo.front();
    todo.pop_front();
    if (!seen.insert(cur).second) continue;
    auto it = heap.find(cur);
    if (it == heap.end()) continue;
    for (auto n : successors(it->second)) todo.push_back(n);
  }
  return seen;
}

bool noshare(const Term& heap, const Term& a, const Term& b) {
  auto h = heap_map(heap);
  auto ra = reachable(h, a), rb = reachable(h, b);
  for (auto k : ra)
    if (rb.count(k)) return false;
  return true;
}

bool acyclic(const Term& heap, const Term& a) {
  auto h = heap_map(heap);
  auto start = key_of(a);
  if (!start) return true;
  enum class Mark { White, Grey, Black };
  std::map<std::int64_t, Mark> mark;
  // Iterative DFS; a grey successor is a back edge.
  std::vector<std::pair<std::int64_t, std::size_t>> stack{{*start, 0}};
  mark[*start] = Mark::Grey;
  while (!stack.empty()) {
    auto& [k, i] = stack.back();
    auto it = h.find(k);
    std::vector<std::int64_t> succ = it == h.end() ? std::vector<std::int64_t>{} : successors(it->second);
    if (i == succ.size()) {
      mark[k] = Mark::Black;
      stack.pop_back();
      continue;
    }
    std::int64_t n = succ[i++];
    Mark m = mark.count(n) ? mark[n] : Mark::White;
    if (m == Mark::Grey) return false;
    if (m == Mark::White) {
      mark[n] = Mark::Grey;
      stack.emplace_back(n, 0);
    }
  }
  return true;
}

namespace {

class Iso {
 public:
  Iso(const Term& ha, const Term& hb) : ha_(heap_map(ha)), hb_(heap_map(hb)) {}

  bool run(const std::vector<Term>& ra, const std::vector<Term>& rb, std::string* why) {
    if (ra.size() != rb.size()) return fail(why, "different number of values");
    for (std::size_t i = 0; i < ra.size(); ++i)
      if (!same(ra[i], rb[i])) return fail(why, "value " + std::to_string(i + 1) + ": " + to_string(ra[i]) + " vs " + to_string(rb[i]));
    while (!todo_.empty()) {
      auto [a, b] = todo_.front();
      todo_.pop_front();
      auto ia = ha_.find(a), ib = hb_.find(b);
      if ((ia == ha_.end()) != (ib == hb_.end())) return fail(why, "location " + std::to_string(a) + " present on one side only");
      if (ia == ha_.end()) continue;
      if (!same(ia->second, ib->second))
        return fail(why, "location " + std::to_string(a) + ": " + to_string(ia->second) + " vs " + to_string(ib->second));
    }
    return true;
  }

 private:
  static bool fail(std::string* why, std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  }

  bool same(const Term& a, const Term& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case TermKind::Int: return a.int_value() == b.int_value();
      case TermKind::Null:
      case TermKind::Nil: return true;
      case TermKind::Atom: return a.name() == b.name();
      case TermKind::Var: return false;
      case TermKind::Ref: {
        if (!a.arg(0).is_int() || !b.arg(0).is_int()) return false;
        std::int64_t x = a.arg(0).int_value(), y = b.arg(0).int_value();
        auto f = fwd_.find(x);
        auto r = rev_.find(y);
        if (f != fwd_.end() || r != rev_.end()) return f != fwd_.end() && r != rev_.end() && f->second == y;
        fwd_[x] = y;
        rev_[y] = x;
        todo_.emplace_back(x, y);
        return true;
      }
      default:
        if (a.kind() == TermKind::Compound && (a.name() != b.name())) return false;
        if (a.arity() != b.arity()) return false;
        for (std::size_t i = 0; i < a.arity(); ++i)
          if (!same(a.arg(i), b.arg(i))) return false;
        return true;
    }
  }

  std::map<std::int64_t, Term> ha_, hb_;
  std::map<std::int64_t, std::int64_t> fwd_, rev_;
  std::deque<std::pair<std::int64_t, std::int64_t>> todo_;
};

void render(std::ostream& os, const Term& v, const std::map<std::int64_t, Term>& h, std::set<std::int64_t>& open) {
  if (v.kind() != TermKind::Ref || !v.arg(0).is_int()) {
    os << to_string(v);
    return;
  }
  std::int64_t k = v.arg(0).int_value();
  auto it = h.find(k);
  if (open.count(k) || it == h.end()) {
    os << "@" << k;
    return;
  }
  open.insert(k);
  const Term& cell = it->second;
  os << "@" << k;
  std::vector<Term> items;
  if (cell.is_compound("object", 2)) {
    os << ":" << cell.arg(0).name() << "{";
    list_items(cell.arg(1), items);
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) os << ",";
      os << items[i].arg(0).name() << "=";
      render(os, items[i].arg(1), h, open);
    }
    os << "}";
  } else if (cell.is_compound("array", 3)) {
    os << "[";
    list_items(cell.arg(2), items);
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) os << ",";
      render(os, items[i], h, open);
    }
    os << "]";
  }
  open.erase(k);
}

}  // namespace

bool equivalent_states(const std::vector<Term>& roots_a, const Term& heap_a, const std::vector<Term>& roots_b,
                       const Term& heap_b, std::string* why) {
  return Iso(heap_a, heap_b).run(roots_a, roots_b, why);
}

std::string render_value(const Term& v, const Term& heap) {
  std::ostringstream os;
  std::set<std::int64_t> open;
  render(os, v, heap_map(heap), open);
  return os.str();
}

}  // namespace tcg
