#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "decon/analysis/model.hpp"

namespace decon::runtime {

struct CommittedTx {
  std::string relation;  // transaction relation name
  Tuple args;
  Value sender = Value::makeAddress(0);
  Value value = Value::makeUint(0);
  Value timestamp = Value::makeUint(0);
};

/// From-scratch reference evaluation. Each committed transaction's rule
/// heads become base facts stamped with the commit number; views are then
/// recomputed bottom-up in dependency order with full scans. Key conflicts
/// keep the fact with the newest support.
class NaiveEvaluator {
 public:
  explicit NaiveEvaluator(const analysis::ContractModel& model);

  /// Applies a committed transaction. Returns false if no transaction rule
  /// derives a head for it.
  bool commit(const CommittedTx& tx);

  /// Whether some transaction rule derives a head for `tx` in the current
  /// state. Nothing changes.
  bool derives(const CommittedTx& tx) const;

  /// Violation rows in the current state.
  std::vector<std::pair<std::string, Tuple>> violations() const;

  /// Every non-transaction relation's rows.
  std::map<std::string, std::set<Tuple>> relations() const;

  /// An arithmetic fault occurred during the last commit.
  bool faulted() const { return faulted_; }

  struct Fact {
    Tuple values;
    uint64_t time = 0;
  };
  using Db = std::map<std::string, std::map<Tuple, Fact>>;

 private:
  Db evaluate() const;
  std::vector<std::pair<std::string, Tuple>> heads(const CommittedTx& tx) const;

  const analysis::ContractModel& model_;
  Db base_;
  Db current_;
  uint64_t clock_ = 0;
  mutable bool faulted_ = false;
};

std::map<std::string, std::set<Tuple>> naiveEvaluate(const analysis::ContractModel& model,
                                                     const std::vector<CommittedTx>& committed);

}  // namespace decon::runtime
