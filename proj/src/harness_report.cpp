#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "tcg/harness.hpp"

namespace tcg {

namespace {

using nlohmann::json;

json value_json(const Term& v) {
  switch (v.kind()) {
    case TermKind::Int: return v.int_value();
    case TermKind::Null: return nullptr;
    case TermKind::Ref:
      if (v.arg(0).is_int()) return json{{"ref", v.arg(0).int_value()}};
      break;
    default: break;
  }
  return to_string(v);
}

json heap_json(const Term& heap) {
  json out = json::array();
  for (const auto& [k, cell] : heap_map(heap)) {
    json c;
    std::vector<Term> items;
    if (cell.is_compound("object", 2)) {
      c["class"] = cell.arg(0).name();
      json fields = json::object();
      list_items(cell.arg(1), items);
      for (const auto& f : items) fields[f.arg(0).name()] = value_json(f.arg(1));
      c["fields"] = fields;
    } else if (cell.is_compound("array", 3)) {
      c["array"] = type_to_string(cell.arg(0));
      c["length"] = value_json(cell.arg(1));
      json elems = json::array();
      list_items(cell.arg(2), items);
      for (const auto& e : items) elems.push_back(value_json(e));
      c["elems"] = elems;
    }
    out.push_back({{"ref", k}, {"cell", c}});
  }
  return out;
}

json args_json(const std::vector<Term>& args) {
  json out = json::array();
  for (const auto& a : args) out.push_back(value_json(a));
  return out;
}

std::string exflag_str(const TestCase& tc) { return tc.exceptional() ? "exc(" + tc.exflag + ")" : "ok"; }

}  // namespace

std::string suite_to_json(const Suite& s, int indent) {
  json j;
  j["schema"] = 1;
  j["entry"] = s.entry;
  j["criterion"] = s.options.criterion.str();
  j["aliasing"] = s.options.alias == AliasMode::On ? "on" : "off";
  j["bounds"] = {s.options.bounds.lo, s.options.bounds.hi};
  json cases = json::array();
  for (std::size_t i = 0; i < s.cases.size(); ++i) {
    const TestCase& tc = s.cases[i];
    json c;
    c["id"] = tc.id;
    c["input"] = {{"args", args_json(tc.input_args)}, {"heap", heap_json(tc.input_heap)}};
    if (tc.exceptional()) c["output"] = nullptr;
    else c["output"] = {{"args", args_json(tc.output_args)}, {"heap", heap_json(*tc.output_heap)}};
    c["exflag"] = exflag_str(tc);
    json trace = json::array();
    for (const auto& st : tc.trace) trace.push_back({st.pred, st.clause});
    c["trace"] = trace;
    if (i < s.replays.size()) {
      c["replay"] = s.replays[i].pass ? "pass" : "fail: " + s.replays[i].diff;
    }
    cases.push_back(c);
  }
  j["cases"] = cases;
  j["coverage"] = {{"exercised", s.coverage.exercised},
                   {"reachable", s.coverage.reachable},
                   {"percent", s.coverage.percent()}};
  j["stopped"] = s.stopped;
  j["ungroundable"] = s.ungroundable;
  j["discarded"] = s.discarded;
  return j.dump(indent);
}

std::string suite_to_text(const Suite& s) {
  std::ostringstream os;
  os << s.entry << "  " << s.options.criterion.str() << "  aliasing " << (s.options.alias == AliasMode::On ? "on" : "off")
     << "  bounds " << s.options.bounds.lo << ".." << s.options.bounds.hi << "\n";
  os << std::left << std::setw(4) << "N" << " | Input | Output | EF\n";
  for (std::size_t i = 0; i < s.cases.size(); ++i) {
    const TestCase& tc = s.cases[i];
    os << std::left << std::setw(4) << tc.id << " | ";
    for (std::size_t a = 0; a < tc.input_args.size(); ++a)
      os << (a ? ", " : "") << render_value(tc.input_args[a], tc.input_heap);
    os << " | ";
    if (tc.exceptional()) {
      os << "-";
    } else {
      std::vector<std::string> parts;
      for (const auto& o : tc.output_args) parts.push_back("ret=" + render_value(o, *tc.output_heap));
      for (const auto& a : tc.input_args) parts.push_back(render_value(a, *tc.output_heap));
      for (std::size_t p = 0; p < parts.size(); ++p) os << (p ? ", " : "") << parts[p];
    }
    os << " | " << exflag_str(tc);
    if (i < s.replays.size() && !s.replays[i].pass) os << "  [replay failed: " << s.replays[i].diff << "]";
    os << "\n";
  }
  os << s.cases.size() << " test cases";
  if (s.stopped) os << ", " << s.stopped << " paths cut by the criterion";
  if (s.ungroundable) os << ", " << s.ungroundable << " ungroundable (try wider --bounds)";
  if (s.discarded) os << ", " << s.discarded << " discarded by preconditions";
  os << "\ncoverage " << s.coverage.exercised << "/" << s.coverage.reachable << " (" << std::fixed
     << std::setprecision(1) << s.coverage.percent() << "%)\n";
  return os.str();
}

}  // namespace tcg
