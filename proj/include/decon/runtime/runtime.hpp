#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "decon/ir/ir.hpp"
#include "decon/provenance/provenance.hpp"
#include "decon/runtime/state.hpp"

namespace decon::runtime {

struct TransactionRequest {
  std::string name;
  Tuple args;
  Value sender = Value::makeAddress(0);
  Value value = Value::makeUint(0);
  Value timestamp = Value::makeUint(0);
};

enum class Outcome { Committed, Rejected, Reverted };

std::string_view outcomeName(Outcome o);

struct Send {
  Value to;
  Value amount;
  friend bool operator==(const Send&, const Send&) = default;
};

struct TransactionReceipt {
  Outcome outcome = Outcome::Committed;
  /// Reverted only: "Violation", "Overflow", "InsufficientContractBalance".
  std::string reason;
  std::vector<provenance::TupleRef> violations;
  std::vector<Send> sends;
  std::vector<std::string> eventsEmitted;
};

struct ExecOptions {
  bool recordProvenance = false;
  /// Test hook: check violation tables after every change instead of at the
  /// end of the transaction, reverting on the first non-empty one.
  bool eagerViolationCheck = false;
  /// Fire dependents of equal depth in reverse order.
  bool reverseTieBreak = false;
};

/// One deployed contract: its state, provenance log and counters.
class Runtime {
 public:
  Runtime(std::shared_ptr<const ir::CompiledContract> contract, ExecOptions options = {});
  ~Runtime();
  Runtime(Runtime&&) noexcept;
  Runtime& operator=(Runtime&&) noexcept;

  /// Runs the constructor transaction (if the contract declares one).
  /// Throws Error("ConstructorReverted") if it does not commit.
  TransactionReceipt instantiate(const Tuple& args, const Value& deployer,
                                 const Value& timestamp = Value::makeUint(0),
                                 const Value& value = Value::makeUint(0));

  TransactionReceipt execute(const TransactionRequest& tx);

  /// Non-key values of the row with the given primary key. Singleton views
  /// ignore keys; views whose columns are all keys return an empty tuple
  /// when the row exists.
  std::optional<Tuple> queryView(const std::string& relation, const Tuple& keys) const;

  const ContractState& state() const;
  const ir::CompiledContract& contract() const;
  const provenance::Log& provenanceLog() const;

  /// Rows examined by searches and aggregate lookups since the last reset.
  uint64_t rowVisits() const;
  void resetRowVisits();
  /// A violation table was non-empty at some point of the last transaction.
  bool transientViolationSeen() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Converts a request's arguments and checks them against the transaction
/// relation's schema.
Tuple coerceArgs(const analysis::ContractModel& model, const std::string& relation, const Tuple& args);

}  // namespace decon::runtime
