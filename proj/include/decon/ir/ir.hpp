#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "decon/analysis/model.hpp"

namespace decon::ir {

enum class TriggerKind { Insert, Delete };

std::string_view triggerKindName(TriggerKind k);

struct Trigger {
  TriggerKind kind = TriggerKind::Insert;
  std::string relation;
  friend auto operator<=>(const Trigger&, const Trigger&) = default;
};

struct Constraint {
  size_t column = 0;
  analysis::TypedTerm term;  // constant or previously grounded variable
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// One node of an abstract update function. Nested statements live in
/// `children`; every kind except Sequence has at most one child.
struct Statement {
  enum class Kind { Search, If, Assign, AggAssign, InsertTuple, DeleteTuple, Sequence };
  Kind kind = Kind::Sequence;

  /// Search: the literal searched. InsertTuple/DeleteTuple: the head.
  analysis::Atom atom;
  std::vector<Constraint> constraints;
  std::vector<std::pair<size_t, std::string>> binds;
  /// Columns that must equal an earlier column of the same row (a variable
  /// repeated in one literal).
  std::vector<std::pair<size_t, size_t>> sameRow;
  /// Search binds nothing, so one matching row suffices.
  bool existential = false;

  analysis::Condition condition;

  /// Assign: `target := function` or `target := source` (from `x == t`).
  std::string target;
  std::optional<analysis::Function> function;
  analysis::TypedTerm source;
  /// Target already grounded: the assignment only filters.
  bool checkOnly = false;

  /// AggAssign: the aggregation and its position in the rule body, which
  /// names its cache.
  analysis::Aggregation aggregation;
  size_t literalIndex = 0;
  /// Group variables not grounded here: enumerate the non-empty groups.
  bool enumerateGroups = false;

  std::vector<Statement> children;

  friend bool operator==(const Statement&, const Statement&) = default;
};

struct UpdateFunction {
  std::string name;
  std::string ruleId;
  Trigger trigger;
  /// Pattern matched against the trigger tuple. For aggregation triggers
  /// the aggregated column is a wildcard.
  analysis::Atom triggerAtom;
  /// Index of the trigger literal in the rule body.
  size_t triggerLiteral = 0;
  bool viaAggregation = false;
  std::vector<std::string> params;
  Statement body;

  friend bool operator==(const UpdateFunction&, const UpdateFunction&) = default;
};

struct JoinIndexRequirement {
  std::string relation;
  std::vector<size_t> constrainedKeys;
  friend auto operator<=>(const JoinIndexRequirement&, const JoinIndexRequirement&) = default;
};

struct AggCacheSpec {
  std::string ruleId;
  size_t literalIndex = 0;
  analysis::Aggregation aggregation;
  friend bool operator==(const AggCacheSpec&, const AggCacheSpec&) = default;
};

struct CompiledContract {
  std::shared_ptr<const analysis::ContractModel> model;
  /// Keyed by (trigger relation, kind); each list in firing order.
  std::map<std::pair<std::string, TriggerKind>, std::vector<UpdateFunction>> updateFunctions;
  std::set<JoinIndexRequirement> joinIndexRequirements;
  std::vector<AggCacheSpec> aggregationCaches;
  std::set<std::string> materialized;
  std::set<std::string> violations;
  std::vector<analysis::FunctionSignature> interface;

  const std::vector<UpdateFunction>& functionsFor(const std::string& relation, TriggerKind kind) const;
  /// All update functions in a stable order.
  std::vector<const UpdateFunction*> allFunctions() const;
};

std::set<Trigger> triggers(const analysis::ContractModel& model, const analysis::Rule& rule);

/// Body literals in evaluation order, the trigger literal (if any) first.
std::vector<analysis::BodyLiteral> orderBody(const analysis::ContractModel& model,
                                             const analysis::Rule& rule,
                                             std::optional<size_t> triggerLiteral);

/// Update functions for one trigger, one per body occurrence of the trigger
/// relation.
std::vector<UpdateFunction> updateFunctions(const analysis::ContractModel& model,
                                            const analysis::Rule& rule, const Trigger& trigger);

/// The first function of updateFunctions().
UpdateFunction updateFunction(const analysis::ContractModel& model, const analysis::Rule& rule,
                              const Trigger& trigger);

/// Evaluation plan for a view rule with the given head columns bound,
/// ending in InsertTuple(head).
Statement derivationPlan(const analysis::ContractModel& model, const analysis::Rule& rule,
                         const std::set<size_t>& boundHeadColumns);

CompiledContract compile(const analysis::ContractModel& model);

std::string formatStatement(const Statement& s, int indent = 0);
std::string formatUpdateFunction(const UpdateFunction& f);
std::string formatIr(const CompiledContract& contract);

}  // namespace decon::ir
