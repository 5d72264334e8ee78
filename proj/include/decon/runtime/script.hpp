#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decon/runtime/naive.hpp"
#include "decon/runtime/runtime.hpp"

namespace decon::runtime {

struct ViewExpectation {
  std::string relation;
  Tuple keys;
  /// nullopt: the row must be absent.
  std::optional<Tuple> equals;
};

struct ScriptTx {
  TransactionRequest request;
  std::optional<Outcome> expect;
  std::vector<ViewExpectation> views;
};

struct TransactionScript {
  std::optional<ScriptTx> constructor;
  std::vector<ScriptTx> txs;
};

/// Parses the JSON script format, typing every value against the contract.
/// Throws Error("ScriptParseError").
TransactionScript parseScript(const analysis::ContractModel& model, const std::string& text);
TransactionScript loadScript(const analysis::ContractModel& model, const std::string& path);

struct RunOptions {
  bool checkExpectations = true;
  /// Compare every stored relation against a from-scratch evaluation after
  /// each committed transaction.
  bool oracleCheck = false;
};

struct ScriptResult {
  /// The constructor's receipt (if any) comes first.
  std::vector<TransactionReceipt> receipts;
  std::vector<std::string> names;
  /// Expectation mismatches and oracle divergences, one line each.
  std::vector<std::string> failures;
};

ScriptResult runScript(Runtime& runtime, const TransactionScript& script, const RunOptions& options = {});

/// Throws Error("ExpectationFailed") listing every failure.
void requireClean(const ScriptResult& result);

/// One JSON object per line.
std::string receiptsJsonLines(const ScriptResult& result);

/// Differences between the stored tables and a reference, one line each.
std::vector<std::string> diffAgainst(const analysis::ContractModel& model, const ContractState& state,
                                     const std::map<std::string, std::set<Tuple>>& reference);

}  // namespace decon::runtime
