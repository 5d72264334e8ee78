#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "decon/error.hpp"
#include "decon/frontend/ast.hpp"
#include "decon/value.hpp"

namespace decon::analysis {

using frontend::AggKind;
using frontend::CompareOp;
using frontend::RelationDecl;
using frontend::RelationKind;

// Typed counterparts of the syntax tree. Constants carry resolved values;
// wildcards stay anonymous and never bind.

struct TypedTerm {
  frontend::Term::Kind kind = frontend::Term::Kind::Variable;
  std::string var;
  Value constant;

  bool isVariable() const { return kind == frontend::Term::Kind::Variable; }
  bool isWildcard() const { return kind == frontend::Term::Kind::Wildcard; }
  bool isConstant() const { return kind == frontend::Term::Kind::Constant; }
  friend bool operator==(const TypedTerm&, const TypedTerm&) = default;
};

struct Atom {
  std::string relation;
  std::vector<TypedTerm> args;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Condition {
  TypedTerm lhs;
  CompareOp op = CompareOp::Eq;
  TypedTerm rhs;
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct Function {
  std::string target;
  ArithOp op = ArithOp::Add;
  TypedTerm lhs;
  TypedTerm rhs;
  friend bool operator==(const Function&, const Function&) = default;
};

struct Aggregation {
  std::string target;
  AggKind agg = AggKind::Sum;
  std::string boundVar;
  Atom over;
  /// Variables of `over` other than the bound variable, in column order.
  std::vector<std::string> groupVars;
  /// True when every group variable is bound by the rest of the body, so the
  /// aggregate is evaluated per outer valuation and an empty group yields the
  /// identity (0 for sum/count). Unguarded aggregations enumerate existing
  /// groups instead.
  bool guarded = false;
  friend bool operator==(const Aggregation&, const Aggregation&) = default;
};

using BodyLiteral = std::variant<Atom, Condition, Function, Aggregation>;

enum class RuleKind { Transaction, View };

struct Rule {
  std::string id;
  size_t ordinal = 0;  // source position among rules
  RuleKind kind = RuleKind::View;
  Atom head;
  std::vector<BodyLiteral> body;
  /// Index into `body` of the transaction literal (transaction rules only).
  std::optional<size_t> transactionLiteral;
  std::map<std::string, ColumnType> varTypes;
  frontend::SourceLoc loc;

  /// Relations read by the body: atoms plus aggregation sources, in order,
  /// with repeats.
  std::vector<std::string> bodyRelations() const;
};

struct DependencyEdge {
  std::string from;
  std::string to;
  std::string ruleId;
  friend bool operator==(const DependencyEdge&, const DependencyEdge&) = default;
};

struct DependencyGraph {
  std::vector<std::string> nodes;
  std::vector<DependencyEdge> edges;
};

struct FunctionSignature {
  enum class Kind { Transaction, View };
  Kind kind = Kind::View;
  std::string name;
  std::vector<frontend::Column> params;
  std::vector<frontend::Column> results;
  friend bool operator==(const FunctionSignature&, const FunctionSignature&) = default;
};

std::string formatSignature(const FunctionSignature& sig);

struct ContractModel {
  /// All relations, reserved ones included, keyed by name.
  std::map<std::string, RelationDecl> relations;
  /// Declaration order (reserved relations first).
  std::vector<std::string> relationOrder;
  std::vector<Rule> rules;
  std::set<std::string> publicViews;
  std::set<std::string> violations;
  DependencyGraph depGraph;
  /// Relations in dependency order (every relation after those it depends
  /// on), ties broken by declaration order.
  std::vector<std::string> topoOrder;
  std::set<std::string> materialized;
  /// Relations whose changes must be propagated: materialized relations, pure
  /// trigger relations upstream of them, transaction heads, and `send`.
  std::set<std::string> needed;

  const RelationDecl& relation(const std::string& name) const;
  bool isTransaction(const std::string& name) const;
  bool isStored(const std::string& name) const { return materialized.count(name) != 0; }
  size_t topoRank(const std::string& name) const;
  /// The transaction relation for a request name: accepts `mint` or
  /// `recv_mint`, and `constructor`.
  std::optional<std::string> transactionRelationFor(const std::string& requestName) const;
  std::optional<std::string> constructorRelation() const;
};

struct Diagnostic {
  std::string severity = "error";
  std::string where;  // rule id or relation name
  std::string code;
  std::string message;

  /// `<severity>:<where>:<code>:<message>`
  std::string format() const;
};

class AnalysisError : public Error {
 public:
  explicit AnalysisError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Type-checks and validates a parsed program. Throws AnalysisError carrying
/// every diagnostic found.
ContractModel validate(const frontend::SourceProgram& program);

/// Least fixpoint of stored relations; see ContractModel::materialized.
std::set<std::string> materializationSet(const ContractModel& model);

std::vector<FunctionSignature> publicInterface(const ContractModel& model);

std::string formatAtom(const Atom& atom);
std::string formatTypedTerm(const TypedTerm& t);
std::string formatBodyLiteral(const BodyLiteral& lit);

}  // namespace decon::analysis
