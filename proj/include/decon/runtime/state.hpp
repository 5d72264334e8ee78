#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "decon/ir/ir.hpp"
#include "decon/value.hpp"

namespace decon::runtime {

struct Row {
  Tuple values;
  /// Inserted as a base fact (transaction-derived); never removed by
  /// rederivation checks, only by key replacement.
  bool pinned = false;
  friend bool operator==(const Row&, const Row&) = default;
};

/// Rows present in the map are the valid ones.
struct Table {
  std::vector<size_t> keyColumns;
  std::map<Tuple, Row> rows;

  Tuple keyOf(const Tuple& row) const;
  const Row* find(const Tuple& key) const;
  friend bool operator==(const Table&, const Table&) = default;
};

struct JoinIndex {
  std::vector<size_t> constrained;
  std::vector<size_t> unconstrained;
  std::map<Tuple, std::set<Tuple>> entries;
  friend bool operator==(const JoinIndex&, const JoinIndex&) = default;
};

struct AggState {
  size_t rows = 0;
  Value total;                      // sum
  std::map<Value, size_t> values;  // max/min multiset
  friend bool operator==(const AggState&, const AggState&) = default;
};

struct AggCache {
  ir::AggCacheSpec spec;
  std::map<Tuple, AggState> groups;
  friend bool operator==(const AggCache&, const AggCache&) = default;
};

struct EventRecord {
  std::string transaction;
  Tuple args;
  Value sender;
  Value value;
  Value timestamp;
  std::vector<std::pair<Value, Value>> sends;
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct ContractState {
  std::map<std::string, Table> tables;
  std::map<ir::JoinIndexRequirement, JoinIndex> joinIndexes;
  std::map<std::pair<std::string, size_t>, AggCache> aggCaches;
  std::map<std::string, size_t> violationCounts;
  Value etherBalance = Value::makeUint(0);
  std::vector<EventRecord> eventLog;

  /// Contents of every stored table as sets of rows.
  std::map<std::string, std::set<Tuple>> contents() const;
  friend bool operator==(const ContractState&, const ContractState&) = default;
};

}  // namespace decon::runtime
