#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "decon/value.hpp"

namespace decon::frontend {

/// Source position. Locations never participate in structural equality, so
/// a re-parsed program compares equal to the original.
struct SourceLoc {
  int line = 0;
  int column = 0;
  friend bool operator==(const SourceLoc&, const SourceLoc&) { return true; }
};

enum class RelationKind { Simple, Singleton, Transaction, Reserved };

struct Column {
  std::string name;
  ColumnType type = ColumnType::Int;
  friend bool operator==(const Column&, const Column&) = default;
};

struct RelationDecl {
  std::string name;
  std::vector<Column> schema;
  std::vector<size_t> primaryKeys;
  RelationKind kind = RelationKind::Simple;
  SourceLoc loc;

  size_t arity() const { return schema.size(); }
  bool isKey(size_t column) const;
  /// Name of the generated external function: `recv_` stripped.
  std::string interfaceName() const;

  friend bool operator==(const RelationDecl&, const RelationDecl&) = default;
};

constexpr std::string_view kTransactionPrefix = "recv_";

bool hasTransactionPrefix(std::string_view name);

enum class AnnotationKind { Public, Violation };

struct Annotation {
  AnnotationKind kind = AnnotationKind::Public;
  std::string relationName;
  SourceLoc loc;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Term {
  enum class Kind { Variable, Wildcard, Constant };
  Kind kind = Kind::Variable;
  /// Variable name, or the literal spelling of a constant ("-5", "0x01",
  /// "true"). Empty for wildcards.
  std::string text;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name)}; }
  static Term wildcard() { return {Kind::Wildcard, {}}; }
  static Term constant(std::string text) { return {Kind::Constant, std::move(text)}; }

  bool isVariable() const { return kind == Kind::Variable; }
  bool isWildcard() const { return kind == Kind::Wildcard; }
  bool isConstant() const { return kind == Kind::Constant; }

  friend bool operator==(const Term&, const Term&) = default;
};

struct RelationalLiteral {
  std::string relation;
  std::vector<Term> args;
  SourceLoc loc;
  friend bool operator==(const RelationalLiteral&, const RelationalLiteral&) = default;
};

enum class CompareOp { Gt, Lt, Ge, Le, Eq, Ne };

std::string_view compareOpSymbol(CompareOp op);

struct ConditionLiteral {
  Term lhs;
  CompareOp op = CompareOp::Eq;
  Term rhs;
  SourceLoc loc;
  friend bool operator==(const ConditionLiteral&, const ConditionLiteral&) = default;
};

/// `target := lhs op rhs` (also spelled with `=`).
struct FunctionLiteral {
  std::string target;
  ArithOp op = ArithOp::Add;
  Term lhs;
  Term rhs;
  SourceLoc loc;
  friend bool operator==(const FunctionLiteral&, const FunctionLiteral&) = default;
};

enum class AggKind { Sum, Max, Min, Count };

std::string_view aggKindName(AggKind k);

/// `target = agg boundVar: over(...)`.
struct AggregationLiteral {
  std::string target;
  AggKind agg = AggKind::Sum;
  std::string boundVar;
  RelationalLiteral over;
  SourceLoc loc;
  friend bool operator==(const AggregationLiteral&, const AggregationLiteral&) = default;
};

using Literal = std::variant<RelationalLiteral, ConditionLiteral, FunctionLiteral, AggregationLiteral>;

struct RuleDecl {
  std::string id;
  /// False when the id was synthesized as `rule_<ordinal>`.
  bool explicitId = true;
  RelationalLiteral head;
  std::vector<Literal> body;
  SourceLoc loc;
  friend bool operator==(const RuleDecl&, const RuleDecl&) = default;
};

struct SourceProgram {
  std::vector<RelationDecl> decls;
  std::vector<Annotation> annotations;
  std::vector<RuleDecl> rules;
  friend bool operator==(const SourceProgram&, const SourceProgram&) = default;
};

/// Relations usable without declaration.
bool isReservedName(std::string_view name);
/// `constructor` or `recv_constructor`.
bool isConstructorName(std::string_view name);

std::string formatTerm(const Term& t);
std::string formatLiteral(const Literal& lit);
std::string formatRelational(const RelationalLiteral& lit);

}  // namespace decon::frontend
