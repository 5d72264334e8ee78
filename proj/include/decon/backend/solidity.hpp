#pragma once

#include <string>
#include <vector>

#include "decon/ir/ir.hpp"

namespace decon::backend {

struct EmitOptions {
  bool instrumentViolations = true;
  bool emitProvenanceEvents = false;
  std::string solidityPragma = "^0.8.0";
  /// Empty: "DeconContract".
  std::string contractName;
};

struct SolidityArtifact {
  std::string sourceText;
  std::vector<analysis::FunctionSignature> interfaceSummary;
};

/// Solidity source for a compiled contract. Deterministic.
/// Throws Error("InvalidName") or Error("UnsupportedFeature").
SolidityArtifact emit(const ir::CompiledContract& contract, const EmitOptions& options);

/// Byte-exact comparison. Throws Error("GoldenMissing") when the file does
/// not exist and Error("GoldenMismatch") carrying a unified diff otherwise.
void goldenCompare(const SolidityArtifact& artifact, const std::string& goldenPath);

/// Line diff with three lines of context; empty when equal.
std::string unifiedDiff(const std::string& expected, const std::string& actual, const std::string& expectedName,
                        const std::string& actualName);

}  // namespace decon::backend
