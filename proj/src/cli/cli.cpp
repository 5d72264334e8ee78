#include "decon/cli/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "decon/backend/solidity.hpp"
#include "decon/frontend/parser.hpp"
#include "decon/pipeline.hpp"
#include "decon/provenance/provenance.hpp"
#include "decon/runtime/script.hpp"
#include "json.hpp"

namespace decon::cli {

namespace {

struct Style {
  bool color = false;
  std::string red(const std::string& s) const { return color ? "\033[31m" + s + "\033[0m" : s; }
  std::string green(const std::string& s) const { return color ? "\033[32m" + s + "\033[0m" : s; }
  std::string yellow(const std::string& s) const { return color ? "\033[33m" + s + "\033[0m" : s; }
};

Style styleFor(bool tty) {
  const char* env = std::getenv("DECON_COLOR");
  if (env) return Style{std::string(env) != "0"};
  return Style{tty};
}

std::vector<analysis::Diagnostic> diagnosticsOf(const Error& e) {
  if (const auto* a = dynamic_cast<const analysis::AnalysisError*>(&e)) return a->diagnostics();
  analysis::Diagnostic d;
  d.code = e.code();
  d.message = e.what();
  if (const auto* p = dynamic_cast<const frontend::ParseError*>(&e)) {
    d.where = std::to_string(p->line()) + ":" + std::to_string(p->column());
  }
  return {d};
}

void report(const Error& e, bool json, const Style& style, std::ostream& err) {
  for (const auto& d : diagnosticsOf(e)) {
    if (json) {
      err << nlohmann::json{{"severity", d.severity}, {"where", d.where}, {"code", d.code}, {"message", d.message}}.dump()
          << "\n";
    } else {
      err << style.red(d.format()) << "\n";
    }
  }
}

void requireFile(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error("IoError", "cannot read '" + path + "'");
}

std::string receiptLine(size_t index, const std::string& name, const runtime::TransactionReceipt& rc,
                        const Style& style) {
  std::string outcome{runtime::outcomeName(rc.outcome)};
  switch (rc.outcome) {
    case runtime::Outcome::Committed: outcome = style.green(outcome); break;
    case runtime::Outcome::Rejected: outcome = style.yellow(outcome); break;
    case runtime::Outcome::Reverted: outcome = style.red(outcome); break;
  }
  std::string line = "receipt " + std::to_string(index) + " " + name + " " + outcome;
  if (!rc.reason.empty()) line += " (" + rc.reason + ")";
  for (const auto& v : rc.violations) line += " " + v.toString();
  for (const auto& s : rc.sends) line += " send(" + s.to.toString() + "," + s.amount.toString() + ")";
  return line;
}

struct ScriptRun {
  std::shared_ptr<const ir::CompiledContract> contract;
  std::unique_ptr<runtime::Runtime> runtime;
  runtime::ScriptResult result;
};

ScriptRun runFile(const std::string& file, const std::string& script, bool provenance, bool oracle) {
  requireFile(file);
  requireFile(script);
  ScriptRun run;
  run.contract = compileFile(file);
  const auto parsed = runtime::loadScript(*run.contract->model, script);
  runtime::ExecOptions exec;
  exec.recordProvenance = provenance;
  run.runtime = std::make_unique<runtime::Runtime>(run.contract, exec);
  runtime::RunOptions opts;
  opts.oracleCheck = oracle;
  run.result = runtime::runScript(*run.runtime, parsed, opts);
  return run;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Style style = styleFor(&err == &std::cerr && isatty(STDERR_FILENO));

  CLI::App app{"DeCon compiler and local runtime", "decon"};
  app.require_subcommand(1);
  bool json = false;

  std::string file, script, outPath, tupleSpec, format = "dot", pragma = "^0.8.0", name, receiptsOut, provOut;
  bool noInstrument = false, provEvents = false, emitIrFlag = false, provenanceFlag = false, oracleCheck = false;

  auto* check = app.add_subcommand("check", "Parse and validate a contract");
  check->add_option("file", file, "Contract source")->required();
  check->add_flag("--json", json, "Machine-readable diagnostics");

  auto* compile = app.add_subcommand("compile", "Emit Solidity (or the IR with --emit-ir)");
  compile->add_option("file", file, "Contract source")->required();
  compile->add_option("-o,--output", outPath, "Output path (default: stdout)");
  compile->add_flag("--emit-ir", emitIrFlag, "Print the intermediate representation");
  compile->add_flag("--no-instrument", noInstrument, "Omit violation checks");
  compile->add_flag("--provenance-events", provEvents, "Emit provenance events");
  compile->add_option("--pragma", pragma, "Solidity version pragma");
  compile->add_option("--name", name, "Contract name");
  compile->add_flag("--json", json, "Machine-readable diagnostics");

  auto* emitIr = app.add_subcommand("emit-ir", "Print the intermediate representation");
  emitIr->add_option("file", file, "Contract source")->required();
  emitIr->add_flag("--json", json, "Machine-readable diagnostics");

  auto* run = app.add_subcommand("run", "Execute a transaction script");
  run->add_option("file", file, "Contract source")->required();
  run->add_option("script", script, "Transaction script (JSON)")->required();
  run->add_flag("--provenance", provenanceFlag, "Record provenance");
  run->add_option("--provenance-out", provOut, "Write the provenance log as JSON lines");
  run->add_flag("--oracle-check", oracleCheck, "Compare against a from-scratch evaluation");
  run->add_option("--receipts-out", receiptsOut, "Write receipts as JSON lines");
  run->add_flag("--json", json, "Receipts as JSON lines");

  auto* explain = app.add_subcommand("explain", "Derivation tree of a tuple after running a script");
  explain->add_option("file", file, "Contract source")->required();
  explain->add_option("script", script, "Transaction script (JSON)")->required();
  explain->add_option("--tuple", tupleSpec, "relation(v1,v2,...)")->required();
  explain->add_option("--format", format, "dot, json or text")->check(CLI::IsMember({"dot", "json", "text"}));
  explain->add_flag("--json", json, "Machine-readable diagnostics");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << style.red(std::string("usage: ") + e.what()) << "\n";
    return 2;
  }

  try {
    if (*check) {
      requireFile(file);
      compileFile(file);
      return 0;
    }
    if (*emitIr || (*compile && emitIrFlag)) {
      requireFile(file);
      const std::string ir = ir::formatIr(*compileFile(file));
      if (outPath.empty()) {
        out << ir;
      } else {
        writeFile(outPath, ir);
      }
      return 0;
    }
    if (*compile) {
      requireFile(file);
      backend::EmitOptions opts;
      opts.instrumentViolations = !noInstrument;
      opts.emitProvenanceEvents = provEvents;
      opts.solidityPragma = pragma;
      opts.contractName = name;
      const auto artifact = backend::emit(*compileFile(file), opts);
      if (outPath.empty()) {
        out << artifact.sourceText;
      } else {
        writeFile(outPath, artifact.sourceText);
      }
      return 0;
    }
    if (*run) {
      auto r = runFile(file, script, provenanceFlag || !provOut.empty(), oracleCheck);
      const auto lines = runtime::receiptsJsonLines(r.result);
      if (json) {
        out << lines;
      } else {
        for (size_t i = 0; i < r.result.receipts.size(); ++i) {
          out << receiptLine(i + 1, r.result.names[i], r.result.receipts[i], style) << "\n";
        }
      }
      if (!receiptsOut.empty()) writeFile(receiptsOut, lines);
      if (!provOut.empty()) writeFile(provOut, provenance::toJsonLines(r.runtime->provenanceLog()));
      runtime::requireClean(r.result);
      return 0;
    }
    if (*explain) {
      auto r = runFile(file, script, true, false);
      const auto& model = *r.contract->model;
      const auto tree = provenance::explain(model, r.runtime->provenanceLog(),
                                            provenance::parseTupleSpec(model, tupleSpec));
      if (format == "json") {
        out << provenance::renderJson(tree);
      } else if (format == "text") {
        out << provenance::renderText(tree);
      } else {
        out << provenance::renderDot(tree);
      }
      return 0;
    }
  } catch (const Error& e) {
    report(e, json, style, err);
    return 1;
  } catch (const std::exception& e) {
    report(Error("InternalError", e.what()), json, style, err);
    return 1;
  }
  return 2;
}

}  // namespace decon::cli
