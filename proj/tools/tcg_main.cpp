#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tcg/harness.hpp"
#include "tcg/minioo.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kDiagnostics = 1;
constexpr int kInternal = 2;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_diags(const std::string& file, const std::vector<tcg::Diagnostic>& ds) {
  for (const auto& d : ds) std::cerr << file << ":" << d.str() << "\n";
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Loads a .moo (compiling it) or .ir program; prints diagnostics.
std::optional<tcg::Program> load_program(const std::string& path, int& code) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "cannot read " << path << "\n";
    code = kDiagnostics;
    return std::nullopt;
  }
  if (ends_with(path, ".moo")) {
    auto r = tcg::moo::compile_source(*text);
    print_diags(path, r.diagnostics);
    if (!r.program) {
      bool internal = false;
      for (const auto& d : r.diagnostics) internal = internal || d.message.rfind("internal:", 0) == 0;
      code = internal ? kInternal : kDiagnostics;
    }
    return r.program;
  }
  auto r = tcg::parse_ir(*text);
  print_diags(path, r.diagnostics);
  if (!r.program || tcg::has_errors(r.diagnostics)) {
    code = kDiagnostics;
    return std::nullopt;
  }
  auto v = tcg::validate(*r.program);
  print_diags(path, v);
  if (tcg::has_errors(v)) {
    code = kDiagnostics;
    return std::nullopt;
  }
  return r.program;
}

int run_compile(const std::string& input, const std::string& output) {
  int code = kOk;
  auto prog = load_program(input, code);
  if (!prog) return code;
  std::string text = tcg::program_to_string(*prog);
  if (output.empty() || output == "-") {
    std::cout << text;
    return kOk;
  }
  std::ofstream out(output);
  if (!out) {
    std::cerr << "cannot write " << output << "\n";
    return kDiagnostics;
  }
  out << text;
  return kOk;
}

struct TcgArgs {
  std::string input, entry, criterion = "block-k:2", aliasing = "off", bounds = "-8..8", pre, out, report = "text";
  bool no_replay = false;
};

int run_tcg(const TcgArgs& a) {
  auto crit = tcg::Criterion::parse(a.criterion);
  if (!crit) {
    std::cerr << "bad criterion " << a.criterion << " (block-k:K with K>0, or depth-k:N)\n";
    return kDiagnostics;
  }
  auto bounds = tcg::parse_bounds(a.bounds);
  if (!bounds) {
    std::cerr << "bad bounds " << a.bounds << " (LO..HI)\n";
    return kDiagnostics;
  }
  int code = kOk;
  auto prog = load_program(a.input, code);
  if (!prog) return code;
  if (!prog->find(a.entry)) {
    std::cerr << "unknown entry " << a.entry << "\n";
    return kDiagnostics;
  }
  tcg::SuiteOptions opts;
  opts.criterion = *crit;
  opts.alias = a.aliasing == "on" ? tcg::AliasMode::On : tcg::AliasMode::Off;
  opts.bounds = *bounds;
  opts.replay = !a.no_replay;
  if (!a.pre.empty()) {
    auto text = read_file(a.pre);
    if (!text) {
      std::cerr << "cannot read " << a.pre << "\n";
      return kDiagnostics;
    }
    std::vector<tcg::Diagnostic> diags;
    auto pre = tcg::parse_precondition(*text, diags);
    print_diags(a.pre, diags);
    if (!pre) return kDiagnostics;
    opts.pre = std::move(*pre);
  }
  tcg::Suite suite = tcg::generate_suite(*prog, a.entry, opts);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) {
      std::cerr << "cannot write " << a.out << "\n";
      return kDiagnostics;
    }
    out << tcg::suite_to_json(suite) << "\n";
  }
  if (a.report == "json") std::cout << tcg::suite_to_json(suite) << "\n";
  else std::cout << tcg::suite_to_text(suite);
  if (!suite.all_replays_pass()) {
    std::cerr << "replay failed for some test cases\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-case generation for a small object-oriented language"};
  app.require_subcommand(1);

  std::string c_in, c_out;
  auto* compile = app.add_subcommand("compile", "Compile a .moo file to clause IR");
  compile->add_option("input", c_in, "source file")->required();
  compile->add_option("-o,--output", c_out, "output .ir file (stdout when omitted)");

  TcgArgs t;
  auto* gen = app.add_subcommand("tcg", "Generate a test suite for one method");
  gen->add_option("input", t.input, ".moo or .ir file")->required();
  gen->add_option("--entry", t.entry, "entry predicate, Class.method")->required();
  gen->add_option("--criterion", t.criterion, "block-k:K or depth-k:N")->capture_default_str();
  gen->add_option("--aliasing", t.aliasing, "on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  gen->add_option("--bounds", t.bounds, "integer labeling bounds LO..HI")->capture_default_str();
  gen->add_option("--pre", t.pre, "precondition file");
  gen->add_option("--out", t.out, "write the suite as JSON");
  gen->add_option("--report", t.report, "stdout format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  gen->add_flag("--no-replay", t.no_replay, "skip the ground replay oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kDiagnostics;
  }
  try {
    if (compile->parsed()) return run_compile(c_in, c_out);
    return run_tcg(t);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
