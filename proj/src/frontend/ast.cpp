#include "decon/frontend/ast.hpp"

#include <algorithm>

namespace decon::frontend {

bool RelationDecl::isKey(size_t column) const {
  return std::find(primaryKeys.begin(), primaryKeys.end(), column) != primaryKeys.end();
}

std::string RelationDecl::interfaceName() const {
  if (hasTransactionPrefix(name)) return name.substr(kTransactionPrefix.size());
  return name;
}

bool hasTransactionPrefix(std::string_view name) {
  return name.size() > kTransactionPrefix.size() && name.starts_with(kTransactionPrefix);
}

bool isReservedName(std::string_view name) {
  return name == "msgSender" || name == "msgValue" || name == "send" || name == "now" ||
         isConstructorName(name);
}

bool isConstructorName(std::string_view name) {
  return name == "constructor" || name == "recv_constructor";
}

std::string_view compareOpSymbol(CompareOp op) {
  switch (op) {
    case CompareOp::Gt: return ">";
    case CompareOp::Lt: return "<";
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

std::string_view aggKindName(AggKind k) {
  switch (k) {
    case AggKind::Sum: return "sum";
    case AggKind::Max: return "max";
    case AggKind::Min: return "min";
    case AggKind::Count: return "count";
  }
  return "?";
}

std::string formatTerm(const Term& t) {
  return t.isWildcard() ? "_" : t.text;
}

std::string formatRelational(const RelationalLiteral& lit) {
  std::string out = lit.relation + "(";
  for (size_t i = 0; i < lit.args.size(); ++i) {
    if (i != 0) out += ",";
    out += formatTerm(lit.args[i]);
  }
  return out + ")";
}

std::string formatLiteral(const Literal& lit) {
  struct Visitor {
    std::string operator()(const RelationalLiteral& r) const { return formatRelational(r); }
    std::string operator()(const ConditionLiteral& c) const {
      return formatTerm(c.lhs) + std::string(compareOpSymbol(c.op)) + formatTerm(c.rhs);
    }
    std::string operator()(const FunctionLiteral& f) const {
      return f.target + " := " + formatTerm(f.lhs) + std::string(arithOpSymbol(f.op)) +
             formatTerm(f.rhs);
    }
    std::string operator()(const AggregationLiteral& a) const {
      return a.target + " = " + std::string(aggKindName(a.agg)) + " " + a.boundVar + ": " +
             formatRelational(a.over);
    }
  };
  return std::visit(Visitor{}, lit);
}

}  // namespace decon::frontend
