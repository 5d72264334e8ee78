#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decon/analysis/model.hpp"
#include "decon/error.hpp"
#include "decon/value.hpp"

namespace decon::provenance {

struct TupleRef {
  std::string relation;
  Tuple values;

  std::string toString() const { return relation + tupleToString(values); }
  friend auto operator<=>(const TupleRef&, const TupleRef&) = default;
};

struct ProvEvent {
  enum class Kind { Read, Write, Delete };
  Kind kind = Kind::Read;
  std::string rule;
  TupleRef tuple;
  uint64_t seq = 0;
  /// Evaluation of one update function (or transaction rule).
  uint64_t firing = 0;
  /// Write only: seqs of the reads on the valuation that produced it.
  std::vector<uint64_t> support;

  friend bool operator==(const ProvEvent&, const ProvEvent&) = default;
};

std::string_view eventKindName(ProvEvent::Kind k);

/// Append-only event log. Sequence numbers start at 1.
class Log {
 public:
  uint64_t read(const std::string& rule, TupleRef tuple, uint64_t firing);
  uint64_t write(const std::string& rule, TupleRef tuple, uint64_t firing, std::vector<uint64_t> support);
  uint64_t erase(const std::string& rule, TupleRef tuple, uint64_t firing);

  const std::vector<ProvEvent>& events() const { return events_; }
  const ProvEvent& at(uint64_t seq) const { return events_.at(seq - 1); }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<ProvEvent> events_;
};

struct ProvTree {
  TupleRef tuple;
  /// Rule of the firing that wrote the tuple; empty for leaves.
  std::string rule;
  /// Seq of the Write explained at this node (0 for leaves).
  uint64_t writeSeq = 0;
  std::vector<ProvTree> children;

  bool isLeaf() const { return rule.empty(); }
  friend bool operator==(const ProvTree&, const ProvTree&) = default;
};

/// Derivation tree rooted at the latest Write of `tuple`. Transaction and
/// reserved tuples are leaves.
ProvTree explain(const analysis::ContractModel& model, const Log& log, const TupleRef& tuple);

std::string renderDot(const ProvTree& tree);
std::string renderText(const ProvTree& tree);
std::string renderJson(const ProvTree& tree);

/// One JSON object per line.
std::string toJsonLines(const Log& log);

/// Parses `relation(v1,v2,...)` against the relation's schema.
TupleRef parseTupleSpec(const analysis::ContractModel& model, std::string_view spec);

}  // namespace decon::provenance
