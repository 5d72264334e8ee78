#include "decon/backend/solidity.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace decon::backend {

using analysis::Aggregation;
using analysis::ContractModel;
using analysis::Rule;
using analysis::TypedTerm;
using frontend::AggKind;
using frontend::CompareOp;
using frontend::RelationDecl;
using frontend::RelationKind;
using ir::Statement;
using ir::TriggerKind;
using ir::UpdateFunction;

namespace {

const std::set<std::string>& reservedWords() {
  static const std::set<std::string> words{
      "abi", "abstract", "address", "after", "alias", "anonymous", "apply", "assert", "auto", "block",
      "bool", "break", "byte", "bytes", "calldata", "case", "catch", "constant", "constructor", "continue",
      "contract", "copyof", "days", "default", "define", "delete", "do", "else", "emit", "enum",
      "error", "ether", "event", "external", "fallback", "false", "final", "for", "function", "gwei",
      "hours", "if", "immutable", "implements", "import", "in", "indexed", "inline", "int", "interface",
      "internal", "is", "let", "library", "macro", "mapping", "match", "memory", "minutes", "modifier",
      "msg", "mutable", "new", "null", "of", "override", "partial", "payable", "pragma", "private",
      "promise", "public", "pure", "receive", "reference", "relocatable", "require", "return", "returns",
      "revert", "sealed", "seconds", "selfdestruct", "sizeof", "static", "storage", "string", "struct",
      "super", "supports", "switch", "this", "throw", "true", "try", "tx", "type", "typedef", "typeof",
      "uint", "unchecked", "using", "var", "view", "virtual", "weeks", "wei", "while", "years"};
  return words;
}

std::string ident(const std::string& name) { return reservedWords().count(name) ? name + "_" : name; }

std::string cap(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

bool validIdentifier(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }) &&
         !reservedWords().count(s);
}

std::string solType(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "int256";
    case ColumnType::Uint: return "uint256";
    case ColumnType::Bool: return "bool";
    case ColumnType::Address: return "address";
  }
  return "uint256";
}

std::string literal(const Value& v) {
  switch (v.type) {
    case ColumnType::Bool: return v.asBool() ? "true" : "false";
    case ColumnType::Address: return v.bits.isZero() ? "address(0)" : "address(uint160(" + v.toString() + "))";
    case ColumnType::Uint: return "uint256(" + v.toString() + ")";
    case ColumnType::Int: {
      if (v.bits == U256::signBit()) return "type(int256).min";
      const std::string s = v.toString();
      return s[0] == '-' ? "-int256(" + s.substr(1) + ")" : "int256(" + s + ")";
    }
  }
  return v.toString();
}

std::string_view opText(CompareOp op) {
  switch (op) {
    case CompareOp::Gt: return ">";
    case CompareOp::Lt: return "<";
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
  }
  return "==";
}

std::string txName(const std::string& rel) { return rel.rfind("recv_", 0) == 0 ? rel.substr(5) : rel; }

class Emitter {
 public:
  Emitter(const ir::CompiledContract& c, const EmitOptions& o) : c_(c), m_(*c.model), o_(o) {
    for (const auto& r : m_.rules) rules_[r.id] = &r;
    for (const auto& req : c_.joinIndexRequirements) indexes_.insert({req.relation, req.constrainedKeys});
    for (const auto& spec : c_.aggregationCaches) {
      caches_[cacheName(spec)] = &spec;
      cachesBySource_[spec.aggregation.over.relation].push_back(&spec);
    }
  }

  std::string run() {
    std::ostringstream body;
    emitUpdateFunctions(body);
    emitHelpers(body);
    emitTransactions(body);
    emitViews(body);
    if (o_.instrumentViolations) emitCheckViolations(body);

    std::ostringstream out;
    out << "// SPDX-License-Identifier: UNLICENSED\n";
    out << "pragma solidity " << o_.solidityPragma << ";\n\n";
    out << "contract " << name() << " {\n";
    emitStorage(out);
    emitEvents(out);
    out << body.str();
    out << "}\n";
    return out.str();
  }

 private:
  // ---- naming -------------------------------------------------------------

  std::string name() const { return o_.contractName.empty() ? "DeconContract" : o_.contractName; }
  static std::string tupleType(const std::string& rel) { return cap(rel) + "Tuple"; }
  static std::string table(const std::string& rel) { return rel + "Table"; }

  std::string indexName(const std::string& rel, const std::vector<size_t>& cols) const {
    if (cols.empty()) return rel + "Keys";
    std::string n = rel + "By";
    const auto& decl = m_.relation(rel);
    for (size_t i = 0; i < cols.size(); ++i) n += (i ? "And" : "") + cap(decl.schema[cols[i]].name);
    return n;
  }
  std::string entryType(const std::string& rel, const std::vector<size_t>& cols) const {
    return cap(indexName(rel, cols)) + "Entry";
  }
  static std::string cacheName(const ir::AggCacheSpec& s) { return s.ruleId + "_" + std::to_string(s.literalIndex); }

  std::string field(const RelationDecl& decl, size_t col) const {
    const std::string& n = decl.schema[col].name;
    return (n == "valid" || n == "indexed") ? n + "_" : ident(n);
  }

  bool isKey(const RelationDecl& decl, size_t col) const {
    return std::find(decl.primaryKeys.begin(), decl.primaryKeys.end(), col) != decl.primaryKeys.end();
  }
  bool singleton(const RelationDecl& d) const { return d.kind == RelationKind::Singleton; }
  std::vector<size_t> rowFields(const RelationDecl& d) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < d.arity(); ++i) {
      if (singleton(d) || !isKey(d, i)) out.push_back(i);
    }
    return out;
  }
  bool needsIndexedFlag(const std::string& rel) const {
    if (m_.violations.count(rel) && !singleton(m_.relation(rel))) return true;
    return std::any_of(indexes_.begin(), indexes_.end(), [&](const auto& ix) { return ix.first == rel; });
  }
  std::vector<std::pair<std::string, std::vector<size_t>>> indexesOf(const std::string& rel) const {
    std::vector<std::pair<std::string, std::vector<size_t>>> out;
    for (const auto& ix : indexes_) {
      if (ix.first == rel) out.push_back(ix);
    }
    return out;
  }

  /// `rel` table access with the given key expressions, in key order.
  std::string access(const std::string& rel, const std::vector<std::string>& keys) const {
    std::string s = table(rel);
    for (const auto& k : keys) s += "[" + k + "]";
    return s;
  }

  std::string mappingType(const std::vector<ColumnType>& keys, const std::string& value) const {
    std::string s = value;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) s = "mapping(" + solType(*it) + " => " + s + ")";
    return s;
  }

  std::vector<ColumnType> keyTypes(const RelationDecl& d) const {
    std::vector<ColumnType> out;
    for (size_t k : d.primaryKeys) out.push_back(d.schema[k].type);
    return out;
  }

  std::vector<ColumnType> groupTypes(const ir::AggCacheSpec& s) const {
    std::vector<ColumnType> out;
    const Rule& r = *rules_.at(s.ruleId);
    for (const auto& g : s.aggregation.groupVars) out.push_back(r.varTypes.at(g));
    return out;
  }
  ColumnType valueType(const ir::AggCacheSpec& s) const { return rules_.at(s.ruleId)->varTypes.at(s.aggregation.boundVar); }

  std::string paramList(const RelationDecl& d) const {
    std::string s;
    for (size_t i = 0; i < d.arity(); ++i) s += (i ? ", " : "") + solType(d.schema[i].type) + " " + field(d, i);
    return s;
  }
  std::string argList(const RelationDecl& d, const std::string& prefix = "") const {
    std::string s;
    for (size_t i = 0; i < d.arity(); ++i) s += (i ? ", " : "") + prefix + field(d, i);
    return s;
  }

  bool stored(const std::string& rel) const { return m_.isStored(rel); }
  bool helperRelation(const std::string& rel) const {
    const auto& d = m_.relation(rel);
    return m_.needed.count(rel) && d.kind != RelationKind::Transaction && d.kind != RelationKind::Reserved;
  }

  // ---- declarations -------------------------------------------------------

  void emitStorage(std::ostream& out) {
    for (const auto& rel : m_.relationOrder) {
      if (!stored(rel)) continue;
      const auto& d = m_.relation(rel);
      out << "  struct " << tupleType(rel) << " {\n";
      for (size_t f : rowFields(d)) out << "    " << solType(d.schema[f].type) << " " << field(d, f) << ";\n";
      out << "    bool valid;\n";
      if (needsIndexedFlag(rel)) out << "    bool indexed;\n";
      out << "  }\n";
      if (singleton(d)) {
        out << "  " << tupleType(rel) << " " << table(rel) << ";\n\n";
      } else {
        out << "  " << mappingType(keyTypes(d), tupleType(rel)) << " " << table(rel) << ";\n\n";
      }
    }
    for (const auto& [rel, cols] : indexes_) {
      const auto& d = m_.relation(rel);
      out << "  struct " << entryType(rel, cols) << " {\n";
      for (size_t k : d.primaryKeys) {
        if (std::find(cols.begin(), cols.end(), k) == cols.end()) {
          out << "    " << solType(d.schema[k].type) << " " << field(d, k) << ";\n";
        }
      }
      out << "  }\n";
      std::vector<ColumnType> ct;
      for (size_t k : cols) ct.push_back(d.schema[k].type);
      out << "  " << mappingType(ct, entryType(rel, cols) + "[]") << " " << indexName(rel, cols) << ";\n\n";
    }
    for (const auto& rel : m_.relationOrder) {
      if (!m_.violations.count(rel) || !stored(rel)) continue;
      const auto& d = m_.relation(rel);
      if (!singleton(d)) {
        out << "  struct " << cap(rel) << "Key {\n";
        for (size_t k : d.primaryKeys) out << "    " << solType(d.schema[k].type) << " " << field(d, k) << ";\n";
        out << "  }\n";
        out << "  " << cap(rel) << "Key[] " << rel << "Keys;\n";
      }
      out << "  uint256 " << rel << "Count;\n\n";
    }
    for (const auto& spec : c_.aggregationCaches) {
      const std::string n = cacheName(spec);
      const auto gt = groupTypes(spec);
      const std::string vt = solType(valueType(spec));
      out << "  " << mappingType(gt, "uint256") << " aggCount_" << n << ";\n";
      if (spec.aggregation.agg == AggKind::Sum) out << "  " << mappingType(gt, vt) << " aggSum_" << n << ";\n";
      if (spec.aggregation.agg == AggKind::Max || spec.aggregation.agg == AggKind::Min) {
        out << "  " << mappingType(gt, vt + "[]") << " aggValues_" << n << ";\n";
        auto mt = gt;
        mt.push_back(valueType(spec));
        out << "  " << mappingType(mt, "uint256") << " aggMult_" << n << ";\n";
      }
      if (enumerated_.count(n) && !gt.empty()) {
        out << "  struct AggGroup_" << n << " {\n";
        const Rule& r = *rules_.at(spec.ruleId);
        for (const auto& g : spec.aggregation.groupVars) out << "    " << solType(r.varTypes.at(g)) << " " << ident(g) << ";\n";
        out << "  }\n";
        out << "  AggGroup_" << n << "[] aggGroups_" << n << ";\n";
        out << "  " << mappingType(gt, "bool") << " aggGroupSeen_" << n << ";\n";
      }
      out << "\n";
    }
    out << "  struct PendingSend {\n    address to;\n    uint256 amount;\n  }\n";
    out << "  PendingSend[] pendingSends;\n";
    out << "  bool headDerived;\n\n";
  }

  void emitEvents(std::ostream& out) {
    for (const auto& rel : m_.relationOrder) {
      const auto& d = m_.relation(rel);
      if (d.kind != RelationKind::Transaction || rel == m_.constructorRelation()) continue;
      out << "  event " << cap(txName(rel)) << "(" << paramList(d) << ");\n";
    }
    if (o_.emitProvenanceEvents) {
      out << "  event ProvRead(string rule, string relation, bytes values);\n";
      out << "  event ProvWrite(string rule, string relation, bytes values);\n";
    }
    out << "\n";
  }

  // ---- update functions ---------------------------------------------------

  struct Scope {
    const Rule* rule = nullptr;
    std::map<std::string, std::string> vars;  // datalog variable -> expression
  };

  std::string term(const TypedTerm& t, const Scope& s) const {
    if (t.isConstant()) return literal(t.constant);
    return s.vars.at(t.var);
  }

  std::string varType(const Scope& s, const std::string& v) const { return solType(s.rule->varTypes.at(v)); }

  std::string pad(int n) const { return std::string(static_cast<size_t>(n) * 2, ' '); }

  void emitUpdateFunctions(std::ostream& out) {
    for (const UpdateFunction* f : c_.allFunctions()) {
      const Rule& rule = *rules_.at(f->ruleId);
      const auto& trig = m_.relation(f->trigger.relation);
      Scope scope;
      scope.rule = &rule;
      out << "  function " << f->name << "(" << paramList(trig) << ") internal {\n";
      std::vector<std::string> checks;
      for (size_t i = 0; i < f->triggerAtom.args.size(); ++i) {
        const auto& a = f->triggerAtom.args[i];
        const std::string col = field(trig, i);
        if (a.isConstant()) {
          checks.push_back(col + " == " + literal(a.constant));
        } else if (a.isVariable()) {
          if (auto it = scope.vars.find(a.var); it != scope.vars.end()) {
            checks.push_back(col + " == " + it->second);
          } else {
            scope.vars[a.var] = col;
          }
        }
      }
      int depth = 2;
      if (!checks.empty()) {
        out << pad(depth) << "if (!(" << join(checks, " && ") << ")) return;\n";
      }
      if (o_.emitProvenanceEvents) {
        out << pad(depth) << "emit ProvRead(\"" << rule.id << "\", \"" << f->trigger.relation << "\", abi.encode("
            << argList(trig) << "));\n";
      }
      const bool txTrigger = trig.kind == RelationKind::Transaction;
      emitStatement(out, f->body, scope, depth, txTrigger);
      out << "  }\n\n";
    }
  }

  static std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string s;
    for (size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
    return s;
  }

  void emitChildren(std::ostream& out, const Statement& s, Scope& scope, int depth, bool tx) {
    for (const auto& c : s.children) emitStatement(out, c, scope, depth, tx);
  }

  void emitStatement(std::ostream& out, const Statement& s, Scope scope, int depth, bool tx) {
    switch (s.kind) {
      case Statement::Kind::Sequence:
        emitChildren(out, s, scope, depth, tx);
        return;
      case Statement::Kind::Search:
        emitSearch(out, s, scope, depth, tx);
        return;
      case Statement::Kind::If:
        out << pad(depth) << "if (" << term(s.condition.lhs, scope) << " " << opText(s.condition.op) << " "
            << term(s.condition.rhs, scope) << ") {\n";
        emitChildren(out, s, scope, depth + 1, tx);
        out << pad(depth) << "}\n";
        return;
      case Statement::Kind::Assign: {
        std::string expr;
        if (s.function) {
          expr = term(s.function->lhs, scope) + " " + std::string(arithOpSymbol(s.function->op)) + " " +
                 term(s.function->rhs, scope);
        } else {
          expr = term(s.source, scope);
        }
        if (s.checkOnly) {
          out << pad(depth) << "if (" << scope.vars.at(s.target) << " == " << expr << ") {\n";
          emitChildren(out, s, scope, depth + 1, tx);
          out << pad(depth) << "}\n";
          return;
        }
        const std::string local = fresh(s.target);
        out << pad(depth) << varType(scope, s.target) << " " << local << " = " << expr << ";\n";
        scope.vars[s.target] = local;
        emitChildren(out, s, scope, depth, tx);
        return;
      }
      case Statement::Kind::AggAssign:
        emitAggregate(out, s, scope, depth, tx);
        return;
      case Statement::Kind::InsertTuple:
      case Statement::Kind::DeleteTuple: {
        std::vector<std::string> args;
        for (const auto& a : s.atom.args) args.push_back(term(a, scope));
        if (o_.emitProvenanceEvents && s.kind == Statement::Kind::InsertTuple) {
          out << pad(depth) << "emit ProvWrite(\"" << scope.rule->id << "\", \"" << s.atom.relation
              << "\", abi.encode(" << join(args, ", ") << "));\n";
        }
        if (s.atom.relation == "send") {
          out << pad(depth) << "pendingSends.push(PendingSend(" << join(args, ", ") << "));\n";
        } else {
          out << pad(depth) << (s.kind == Statement::Kind::InsertTuple ? "insert" : "delete") << cap(s.atom.relation)
              << "(" << join(args, ", ") << ");\n";
        }
        if (tx && s.kind == Statement::Kind::InsertTuple) out << pad(depth) << "headDerived = true;\n";
        return;
      }
    }
  }

  std::string fresh(const std::string& base) { return ident(base) + "_" + std::to_string(++counter_); }

  void emitReserved(std::ostream& out, const Statement& s, Scope& scope, int depth, bool tx) {
    std::string src = "msg.sender";
    if (s.atom.relation == "msgValue") src = "msg.value";
    if (s.atom.relation == "now") src = "block.timestamp";
    if (!s.constraints.empty()) {
      out << pad(depth) << "if (" << src << " == " << term(s.constraints[0].term, scope) << ") {\n";
      emitChildren(out, s, scope, depth + 1, tx);
      out << pad(depth) << "}\n";
      return;
    }
    for (const auto& [col, var] : s.binds) {
      const std::string local = fresh(var);
      out << pad(depth) << varType(scope, var) << " " << local << " = " << src << ";\n";
      scope.vars[var] = local;
    }
    emitChildren(out, s, scope, depth, tx);
  }

  void emitSearch(std::ostream& out, const Statement& s, Scope& scope, int depth, bool tx) {
    const std::string& rel = s.atom.relation;
    const auto& d = m_.relation(rel);
    if (d.kind == RelationKind::Reserved) {
      emitReserved(out, s, scope, depth, tx);
      return;
    }
    if (!stored(rel)) throw Error("UnsupportedFeature", "search over non-materialized relation '" + rel + "'");
    std::map<size_t, std::string> known;
    for (const auto& c : s.constraints) known[c.column] = term(c.term, scope);
    std::vector<size_t> constrainedKeys;
    for (size_t k : d.primaryKeys) {
      if (known.count(k)) constrainedKeys.push_back(k);
    }
    const int id = ++counter_;
    const std::string row = "t" + std::to_string(id);
    std::map<size_t, std::string> colExpr = known;
    int inner = depth;
    const bool loop = constrainedKeys.size() < d.primaryKeys.size();
    if (loop) {
      indexes_.insert({rel, constrainedKeys});
      const std::string es = "es" + std::to_string(id), i = "i" + std::to_string(id), e = "e" + std::to_string(id);
      std::vector<std::string> ck;
      for (size_t k : constrainedKeys) ck.push_back(known[k]);
      std::string arr = indexName(rel, constrainedKeys);
      for (const auto& k : ck) arr += "[" + k + "]";
      out << pad(depth) << entryType(rel, constrainedKeys) << "[] storage " << es << " = " << arr << ";\n";
      out << pad(depth) << "for (uint256 " << i << " = 0; " << i << " < " << es << ".length; " << i << "++) {\n";
      inner = depth + 1;
      out << pad(inner) << entryType(rel, constrainedKeys) << " memory " << e << " = " << es << "[" << i << "];\n";
      for (size_t k : d.primaryKeys) {
        if (!known.count(k)) colExpr[k] = e + "." + field(d, k);
      }
    }
    std::vector<std::string> keys;
    for (size_t k : d.primaryKeys) keys.push_back(colExpr.at(k));
    out << pad(inner) << tupleType(rel) << " memory " << row << " = " << (singleton(d) ? table(rel) : access(rel, keys))
        << ";\n";
    for (size_t f : rowFields(d)) {
      if (!known.count(f)) colExpr[f] = row + "." + field(d, f);
    }
    std::vector<std::string> conds{row + ".valid"};
    for (const auto& [col, expr] : known) {
      if (!isKey(d, col) || singleton(d)) conds.push_back(row + "." + field(d, col) + " == " + expr);
    }
    for (const auto& [a, b] : s.sameRow) conds.push_back(colExpr.at(a) + " == " + colExpr.at(b));
    out << pad(inner) << "if (" << join(conds, " && ") << ") {\n";
    if (o_.emitProvenanceEvents) {
      std::vector<std::string> all;
      for (size_t i = 0; i < d.arity(); ++i) all.push_back(colExpr.at(i));
      out << pad(inner + 1) << "emit ProvRead(\"" << scope.rule->id << "\", \"" << rel << "\", abi.encode("
          << join(all, ", ") << "));\n";
    }
    for (const auto& [col, var] : s.binds) {
      const std::string local = fresh(var);
      out << pad(inner + 1) << varType(scope, var) << " " << local << " = " << colExpr.at(col) << ";\n";
      scope.vars[var] = local;
    }
    emitChildren(out, s, scope, inner + 1, tx);
    if (loop && s.existential) out << pad(inner + 1) << "break;\n";
    out << pad(inner) << "}\n";
    if (loop) out << pad(depth) << "}\n";
  }

  std::string cacheRef(const std::string& prefix, const std::string& n, const std::vector<std::string>& group) const {
    std::string s = prefix + n;
    for (const auto& g : group) s += "[" + g + "]";
    return s;
  }

  void emitAggregate(std::ostream& out, const Statement& s, Scope& scope, int depth, bool tx) {
    const auto& agg = s.aggregation;
    const std::string n = scope.rule->id + "_" + std::to_string(s.literalIndex);
    if (!caches_.count(n)) throw Error("UnsupportedFeature", "no cache for aggregation in rule " + n);
    std::vector<std::string> group;
    int inner = depth;
    std::vector<std::string> conds;
    if (s.enumerateGroups && !agg.groupVars.empty()) {
      enumerated_.insert(n);
      const int id = ++counter_;
      const std::string i = "i" + std::to_string(id), g = "g" + std::to_string(id);
      out << pad(depth) << "for (uint256 " << i << " = 0; " << i << " < aggGroups_" << n << ".length; " << i
          << "++) {\n";
      inner = depth + 1;
      out << pad(inner) << "AggGroup_" << n << " memory " << g << " = aggGroups_" << n << "[" << i << "];\n";
      for (const auto& v : agg.groupVars) {
        const std::string e = g + "." + ident(v);
        if (auto it = scope.vars.find(v); it != scope.vars.end()) {
          conds.push_back(e + " == " + it->second);
        } else {
          scope.vars[v] = e;
        }
        group.push_back(e);
      }
    } else {
      for (const auto& v : agg.groupVars) group.push_back(scope.vars.at(v));
    }
    const bool needNonEmpty = !agg.guarded || agg.agg == AggKind::Max || agg.agg == AggKind::Min ||
                              (s.enumerateGroups && !agg.groupVars.empty());
    if (needNonEmpty) conds.push_back(cacheRef("aggCount_", n, group) + " > 0");
    std::string value;
    switch (agg.agg) {
      case AggKind::Sum: value = cacheRef("aggSum_", n, group); break;
      case AggKind::Count: value = cacheRef("aggCount_", n, group); break;
      case AggKind::Max: value = "aggMax_" + n + "(" + join(group, ", ") + ")"; break;
      case AggKind::Min: value = "aggMin_" + n + "(" + join(group, ", ") + ")"; break;
    }
    int body = inner;
    if (!conds.empty()) {
      out << pad(inner) << "if (" << join(conds, " && ") << ") {\n";
      body = inner + 1;
    }
    if (s.checkOnly) {
      out << pad(body) << "if (" << scope.vars.at(agg.target) << " == " << value << ") {\n";
      emitChildren(out, s, scope, body + 1, tx);
      out << pad(body) << "}\n";
    } else {
      const std::string local = fresh(agg.target);
      out << pad(body) << varType(scope, agg.target) << " " << local << " = " << value << ";\n";
      scope.vars[agg.target] = local;
      emitChildren(out, s, scope, body, tx);
    }
    if (!conds.empty()) out << pad(inner) << "}\n";
    if (inner != depth) out << pad(depth) << "}\n";
  }

  // ---- insert/delete helpers ---------------------------------------------

  void callFunctions(std::ostream& out, const std::string& rel, TriggerKind kind, bool aggOnly, int depth) {
    const auto& d = m_.relation(rel);
    for (const auto& f : c_.functionsFor(rel, kind)) {
      if (aggOnly && !f.viaAggregation) continue;
      out << pad(depth) << f.name << "(" << argList(d) << ");\n";
    }
  }

  void emitCacheUpdates(std::ostream& out, const std::string& rel, bool add, int depth) {
    auto it = cachesBySource_.find(rel);
    if (it == cachesBySource_.end()) return;
    const auto& d = m_.relation(rel);
    for (const auto* spec : it->second) {
      const std::string n = cacheName(*spec);
      const auto& agg = spec->aggregation;
      std::vector<std::string> conds;
      std::map<std::string, std::string> seen;
      std::string value;
      for (size_t i = 0; i < agg.over.args.size(); ++i) {
        const auto& t = agg.over.args[i];
        const std::string col = field(d, i);
        if (t.isConstant()) {
          conds.push_back(col + " == " + literal(t.constant));
        } else if (t.isVariable()) {
          if (t.var == agg.boundVar) {
            value = col;
          } else if (auto s = seen.find(t.var); s != seen.end()) {
            conds.push_back(col + " == " + s->second);
          } else {
            seen[t.var] = col;
          }
        }
      }
      std::vector<std::string> group;
      for (const auto& g : agg.groupVars) group.push_back(seen.at(g));
      int inner = depth;
      if (!conds.empty()) {
        out << pad(depth) << "if (" << join(conds, " && ") << ") {\n";
        inner = depth + 1;
      }
      const std::string op = add ? " += " : " -= ";
      out << pad(inner) << cacheRef("aggCount_", n, group) << op << "1;\n";
      if (agg.agg == AggKind::Sum) out << pad(inner) << cacheRef("aggSum_", n, group) << op << value << ";\n";
      if (agg.agg == AggKind::Max || agg.agg == AggKind::Min) {
        auto mult = group;
        mult.push_back(value);
        if (add) {
          out << pad(inner) << "if (" << cacheRef("aggMult_", n, mult) << " == 0) " << cacheRef("aggValues_", n, group)
              << ".push(" << value << ");\n";
        }
        out << pad(inner) << cacheRef("aggMult_", n, mult) << op << "1;\n";
      }
      if (add && enumerated_.count(n) && !group.empty()) {
        out << pad(inner) << "if (!" << cacheRef("aggGroupSeen_", n, group) << ") {\n";
        out << pad(inner + 1) << cacheRef("aggGroupSeen_", n, group) << " = true;\n";
        out << pad(inner + 1) << "aggGroups_" << n << ".push(AggGroup_" << n << "(" << join(group, ", ") << "));\n";
        out << pad(inner) << "}\n";
      }
      if (!conds.empty()) out << pad(depth) << "}\n";
    }
  }

  void emitHelpers(std::ostream& out) {
    for (const auto& rel : m_.relationOrder) {
      if (!helperRelation(rel) || rel == "send") continue;
      const auto& d = m_.relation(rel);
      std::vector<std::string> keys;
      for (size_t k : d.primaryKeys) keys.push_back(field(d, k));
      const std::string rowExpr = singleton(d) ? table(rel) : access(rel, keys);
      std::vector<std::string> same;
      for (size_t f : rowFields(d)) same.push_back("row." + field(d, f) + " == " + field(d, f));

      out << "  function insert" << cap(rel) << "(" << paramList(d) << ") internal {\n";
      if (stored(rel)) {
        out << "    " << tupleType(rel) << " storage row = " << rowExpr << ";\n";
        out << "    if (row.valid) {\n";
        if (same.empty()) {
          out << "      return;\n";
        } else {
          out << "      if (" << join(same, " && ") << ") return;\n";
          std::vector<std::string> old;
          for (size_t i = 0; i < d.arity(); ++i) {
            old.push_back((singleton(d) || !isKey(d, i)) ? "row." + field(d, i) : field(d, i));
          }
          out << "      delete" << cap(rel) << "(" << join(old, ", ") << ");\n";
        }
        out << "    }\n";
        callFunctions(out, rel, TriggerKind::Delete, true, 2);
        for (size_t f : rowFields(d)) out << "    row." << field(d, f) << " = " << field(d, f) << ";\n";
        out << "    row.valid = true;\n";
        if (needsIndexedFlag(rel)) {
          out << "    if (!row.indexed) {\n      row.indexed = true;\n";
          for (const auto& [r, cols] : indexesOf(rel)) {
            std::string arr = indexName(rel, cols);
            for (size_t k : cols) arr += "[" + field(d, k) + "]";
            std::vector<std::string> rest;
            for (size_t k : d.primaryKeys) {
              if (std::find(cols.begin(), cols.end(), k) == cols.end()) rest.push_back(field(d, k));
            }
            out << "      " << arr << ".push(" << entryType(rel, cols) << "(" << join(rest, ", ") << "));\n";
          }
          if (m_.violations.count(rel)) out << "      " << rel << "Keys.push(" << cap(rel) << "Key(" << join(keys, ", ") << "));\n";
          out << "    }\n";
        }
        emitCacheUpdates(out, rel, true, 2);
        if (m_.violations.count(rel)) out << "    " << rel << "Count += 1;\n";
      }
      callFunctions(out, rel, TriggerKind::Insert, false, 2);
      out << "  }\n\n";

      out << "  function delete" << cap(rel) << "(" << paramList(d) << ") internal {\n";
      if (stored(rel)) {
        out << "    " << tupleType(rel) << " storage row = " << rowExpr << ";\n";
        same.insert(same.begin(), "row.valid");
        out << "    if (!(" << join(same, " && ") << ")) return;\n";
      }
      callFunctions(out, rel, TriggerKind::Delete, false, 2);
      if (stored(rel)) {
        out << "    row.valid = false;\n";
        emitCacheUpdates(out, rel, false, 2);
        if (m_.violations.count(rel)) out << "    " << rel << "Count -= 1;\n";
        callFunctions(out, rel, TriggerKind::Insert, true, 2);
      }
      out << "  }\n\n";
    }
    for (const auto& spec : c_.aggregationCaches) {
      if (spec.aggregation.agg != AggKind::Max && spec.aggregation.agg != AggKind::Min) continue;
      const std::string n = cacheName(spec);
      const bool isMax = spec.aggregation.agg == AggKind::Max;
      const auto gt = groupTypes(spec);
      std::vector<std::string> params, group;
      for (size_t i = 0; i < gt.size(); ++i) {
        params.push_back(solType(gt[i]) + " g" + std::to_string(i));
        group.push_back("g" + std::to_string(i));
      }
      const std::string vt = solType(valueType(spec));
      auto mult = group;
      mult.push_back("vs[i]");
      out << "  function agg" << (isMax ? "Max_" : "Min_") << n << "(" << join(params, ", ")
          << ") internal view returns (" << vt << " best) {\n";
      out << "    " << vt << "[] storage vs = " << cacheRef("aggValues_", n, group) << ";\n";
      out << "    bool found = false;\n";
      out << "    for (uint256 i = 0; i < vs.length; i++) {\n";
      out << "      if (" << cacheRef("aggMult_", n, mult) << " > 0 && (!found || vs[i] " << (isMax ? ">" : "<")
          << " best)) {\n";
      out << "        best = vs[i];\n        found = true;\n      }\n    }\n  }\n\n";
    }
  }

  // ---- public interface ---------------------------------------------------

  void emitTransactionBody(std::ostream& out, const std::string& rel, bool ctor) {
    const auto& d = m_.relation(rel);
    out << "    headDerived = false;\n";
    for (const auto& f : c_.functionsFor(rel, TriggerKind::Insert)) {
      out << "    " << f.name << "(" << argList(d) << ");\n";
    }
    if (ctor) {
      out << "    require(headDerived, \"constructor rejected\");\n";
    } else {
      out << "    if (!headDerived) return false;\n";
    }
    if (o_.instrumentViolations) out << "    checkViolations();\n";
    out << "    flushSends();\n";
    if (!ctor) {
      out << "    emit " << cap(txName(rel)) << "(" << argList(d) << ");\n";
      out << "    return true;\n";
    }
  }

  void emitTransactions(std::ostream& out) {
    const auto ctor = m_.constructorRelation();
    if (ctor) {
      out << "  constructor(" << paramList(m_.relation(*ctor)) << ") payable {\n";
      emitTransactionBody(out, *ctor, true);
      out << "  }\n\n";
    }
    for (const auto& rel : m_.relationOrder) {
      const auto& d = m_.relation(rel);
      if (d.kind != RelationKind::Transaction || rel == ctor) continue;
      out << "  function " << txName(rel) << "(" << paramList(d) << ") public payable returns (bool) {\n";
      emitTransactionBody(out, rel, false);
      out << "  }\n\n";
    }
    out << "  function flushSends() internal {\n";
    out << "    for (uint256 i = 0; i < pendingSends.length; i++) {\n";
    out << "      (bool ok, ) = payable(pendingSends[i].to).call{value: pendingSends[i].amount}(\"\");\n";
    out << "      require(ok, \"send failed\");\n";
    out << "    }\n";
    out << "    delete pendingSends;\n";
    out << "  }\n\n";
  }

  void emitViews(std::ostream& out) {
    for (const auto& sig : c_.interface) {
      if (sig.kind != analysis::FunctionSignature::Kind::View) continue;
      const auto& d = m_.relation(sig.name);
      std::string params, results;
      for (size_t i = 0; i < d.primaryKeys.size() && !singleton(d); ++i) {
        params += (i ? ", " : "") + solType(d.schema[d.primaryKeys[i]].type) + " " + field(d, d.primaryKeys[i]);
      }
      for (size_t i = 0; i < sig.results.size(); ++i) results += (i ? ", " : "") + solType(sig.results[i].type);
      out << "  function " << sig.name << "(" << params << ") public view returns (" << results << ") {\n";
      std::vector<std::string> keys;
      for (size_t k : d.primaryKeys) keys.push_back(field(d, k));
      out << "    " << tupleType(sig.name) << " memory row = " << (singleton(d) ? table(sig.name) : access(sig.name, keys))
          << ";\n";
      const auto fields = rowFields(d);
      if (fields.empty()) {
        out << "    return row.valid;\n";
      } else {
        std::vector<std::string> vals;
        for (size_t f : fields) vals.push_back("row." + field(d, f));
        out << "    return " << (vals.size() == 1 ? vals[0] : "(" + join(vals, ", ") + ")") << ";\n";
      }
      out << "  }\n\n";
    }
  }

  void emitCheckViolations(std::ostream& out) {
    out << "  function checkViolations() internal view {\n";
    for (const auto& rel : m_.relationOrder) {
      if (!m_.violations.count(rel) || !stored(rel)) continue;
      const auto& d = m_.relation(rel);
      out << "    if (" << rel << "Count > 0) {\n";
      if (singleton(d)) {
        out << "      if (" << table(rel) << ".valid) revert(\"" << rel << "\");\n";
      } else {
        out << "      for (uint256 i = 0; i < " << rel << "Keys.length; i++) {\n";
        out << "        " << cap(rel) << "Key memory k = " << rel << "Keys[i];\n";
        std::vector<std::string> keys;
        for (size_t k : d.primaryKeys) keys.push_back("k." + field(d, k));
        out << "        if (" << access(rel, keys) << ".valid) revert(\"" << rel << "\");\n";
        out << "      }\n";
      }
      out << "    }\n";
    }
    out << "  }\n\n";
  }

  const ir::CompiledContract& c_;
  const ContractModel& m_;
  const EmitOptions& o_;
  std::map<std::string, const Rule*> rules_;
  std::set<std::pair<std::string, std::vector<size_t>>> indexes_;
  std::map<std::string, const ir::AggCacheSpec*> caches_;
  std::map<std::string, std::vector<const ir::AggCacheSpec*>> cachesBySource_;
  std::set<std::string> enumerated_;
  int counter_ = 0;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

SolidityArtifact emit(const ir::CompiledContract& contract, const EmitOptions& options) {
  if (!options.contractName.empty() && !validIdentifier(options.contractName)) {
    throw Error("InvalidName", "'" + options.contractName + "' is not a valid contract name");
  }
  Emitter e(contract, options);
  return SolidityArtifact{e.run(), contract.interface};
}

std::string unifiedDiff(const std::string& expected, const std::string& actual, const std::string& expectedName,
                        const std::string& actualName) {
  const auto a = lines(expected), b = lines(actual);
  const size_t n = a.size(), m = b.size();
  std::vector<std::vector<uint32_t>> lcs(n + 1, std::vector<uint32_t>(m + 1, 0));
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  struct Op {
    char kind;
    size_t ai, bi;
  };
  std::vector<Op> ops;
  size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      ops.push_back({' ', i++, j++});
    } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      ops.push_back({'-', i++, j});
    } else {
      ops.push_back({'+', i, j++});
    }
  }
  std::ostringstream out;
  constexpr size_t kContext = 3;
  size_t k = 0;
  bool any = false;
  while (k < ops.size()) {
    if (ops[k].kind == ' ') {
      ++k;
      continue;
    }
    if (!any) {
      out << "--- " << expectedName << "\n+++ " << actualName << "\n";
      any = true;
    }
    const size_t start = k >= kContext ? k - kContext : 0;
    size_t end = k;
    size_t quiet = 0;
    while (end < ops.size() && quiet <= 2 * kContext) {
      quiet = ops[end].kind == ' ' ? quiet + 1 : 0;
      ++end;
    }
    end = std::min(ops.size(), end - (quiet > kContext ? quiet - kContext : 0));
    size_t aLen = 0, bLen = 0;
    for (size_t x = start; x < end; ++x) {
      aLen += ops[x].kind != '+';
      bLen += ops[x].kind != '-';
    }
    out << "@@ -" << ops[start].ai + (aLen ? 1 : 0) << "," << aLen << " +" << ops[start].bi + (bLen ? 1 : 0) << ","
        << bLen << " @@\n";
    for (size_t x = start; x < end; ++x) {
      const auto& op = ops[x];
      out << op.kind << (op.kind == '+' ? b[op.bi] : a[op.ai]) << "\n";
    }
    k = end;
  }
  return out.str();
}

void goldenCompare(const SolidityArtifact& artifact, const std::string& goldenPath) {
  std::ifstream in(goldenPath, std::ios::binary);
  if (!in) throw Error("GoldenMissing", "golden file '" + goldenPath + "' does not exist");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string golden = ss.str();
  if (golden == artifact.sourceText) return;
  const auto a = lines(golden), b = lines(artifact.sourceText);
  size_t first = 0;
  while (first < a.size() && first < b.size() && a[first] == b[first]) ++first;
  throw Error("GoldenMismatch", "first divergent line " + std::to_string(first + 1) + "\n" +
                                    unifiedDiff(golden, artifact.sourceText, goldenPath, "emitted"));
}

}  // namespace decon::backend
