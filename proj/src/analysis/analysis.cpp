#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>

#include "decon/analysis/model.hpp"

namespace decon::analysis {

using frontend::Annotation;
using frontend::AnnotationKind;
using frontend::Column;
using frontend::RuleDecl;
using frontend::Term;

namespace {

bool isReadOnlyReserved(const std::string& name) {
  return name == "msgSender" || name == "msgValue" || name == "now";
}

RelationDecl reserved(std::string name, std::vector<Column> schema) {
  RelationDecl d;
  d.name = std::move(name);
  d.schema = std::move(schema);
  d.kind = RelationKind::Reserved;
  return d;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out += sep;
    out += parts[i];
  }
  return out;
}

class RuleChecker {
 public:
  RuleChecker(const std::map<std::string, RelationDecl>& relations, const RuleDecl& rule,
              std::vector<Diagnostic>& diags)
      : relations_(relations), src_(rule), diags_(diags) {}

  std::optional<Rule> run(size_t ordinal) {
    Rule out;
    out.id = src_.id;
    out.ordinal = ordinal;
    out.loc = src_.loc;

    collectAtomTypes();
    inferDerivedTypes();
    if (failed_) return std::nullopt;

    out.varTypes = types_;
    if (!typeHead(out.head)) return std::nullopt;
    for (size_t i = 0; i < src_.body.size(); ++i) {
      auto lit = typeLiteral(src_.body[i]);
      if (!lit) return std::nullopt;
      out.body.push_back(std::move(*lit));
    }
    if (!checkStructure(out)) return std::nullopt;
    markGuards(out);
    if (!checkGrounded(out)) return std::nullopt;
    return out;
  }

 private:
  void error(const std::string& code, const std::string& message) {
    diags_.push_back(Diagnostic{"error", src_.id, code, message});
    failed_ = true;
  }

  const RelationDecl* lookup(const std::string& name) {
    auto it = relations_.find(name);
    if (it == relations_.end()) {
      error("UnknownRelation", "relation '" + name + "' is not declared");
      return nullptr;
    }
    return &it->second;
  }

  void unify(const std::string& var, ColumnType type) {
    auto [it, inserted] = types_.emplace(var, type);
    if (!inserted && it->second != type) {
      error("TypeMismatch", "variable '" + var + "' used as " + std::string(typeName(it->second)) +
                                " and " + std::string(typeName(type)));
    }
  }

  void collectAtom(const frontend::RelationalLiteral& lit) {
    const RelationDecl* decl = lookup(lit.relation);
    if (decl == nullptr) return;
    if (decl->arity() != lit.args.size()) {
      error("ArityMismatch", "'" + lit.relation + "' has arity " + std::to_string(decl->arity()) +
                                 ", used with " + std::to_string(lit.args.size()) + " arguments");
      return;
    }
    for (size_t i = 0; i < lit.args.size(); ++i) {
      if (lit.args[i].isVariable()) unify(lit.args[i].text, decl->schema[i].type);
    }
  }

  void collectAtomTypes() {
    for (const auto& lit : src_.body) {
      if (const auto* a = std::get_if<frontend::RelationalLiteral>(&lit)) collectAtom(*a);
      if (const auto* g = std::get_if<frontend::AggregationLiteral>(&lit)) collectAtom(g->over);
    }
  }

  std::optional<ColumnType> typeOf(const Term& t) const {
    if (t.isVariable()) {
      auto it = types_.find(t.text);
      if (it != types_.end()) return it->second;
      return std::nullopt;
    }
    if (t.isConstant() && (t.text == "true" || t.text == "false")) return ColumnType::Bool;
    return std::nullopt;
  }

  // Types of function targets and aggregation results, to fixpoint.
  void inferDerivedTypes() {
    bool changed = true;
    while (changed && !failed_) {
      changed = false;
      for (const auto& lit : src_.body) {
        if (const auto* f = std::get_if<frontend::FunctionLiteral>(&lit)) {
          auto t = typeOf(f->lhs);
          if (!t) t = typeOf(f->rhs);
          if (t && !types_.count(f->target)) {
            types_[f->target] = *t;
            changed = true;
          } else if (!t && types_.count(f->target)) {
            for (const Term* op : {&f->lhs, &f->rhs}) {
              if (op->isVariable() && !types_.count(op->text)) {
                types_[op->text] = types_[f->target];
                changed = true;
              }
            }
          }
        } else if (const auto* g = std::get_if<frontend::AggregationLiteral>(&lit)) {
          std::optional<ColumnType> t;
          if (g->agg == AggKind::Count) {
            t = ColumnType::Uint;
          } else {
            auto it = types_.find(g->boundVar);
            if (it != types_.end()) t = it->second;
          }
          if (t && !types_.count(g->target)) {
            types_[g->target] = *t;
            changed = true;
          }
        } else if (const auto* c = std::get_if<frontend::ConditionLiteral>(&lit)) {
          const auto lt = typeOf(c->lhs);
          const auto rt = typeOf(c->rhs);
          if (lt && !rt && c->rhs.isVariable()) {
            types_[c->rhs.text] = *lt;
            changed = true;
          } else if (rt && !lt && c->lhs.isVariable()) {
            types_[c->lhs.text] = *rt;
            changed = true;
          }
        }
      }
    }
  }

  std::optional<TypedTerm> typeTerm(const Term& t, ColumnType expected, const std::string& context) {
    TypedTerm out;
    out.kind = t.kind;
    if (t.isVariable()) {
      out.var = t.text;
      auto it = types_.find(t.text);
      if (it == types_.end()) {
        error("TypeMismatch", "cannot infer a type for variable '" + t.text + "'");
        return std::nullopt;
      }
      if (it->second != expected) {
        error("TypeMismatch", "variable '" + t.text + "' is " + std::string(typeName(it->second)) +
                                  " but " + context + " expects " + std::string(typeName(expected)));
        return std::nullopt;
      }
    } else if (t.isConstant()) {
      auto v = parseValue(t.text, expected);
      if (!v) {
        error("TypeMismatch", "constant '" + t.text + "' is not a valid " +
                                  std::string(typeName(expected)) + " in " + context);
        return std::nullopt;
      }
      out.constant = *v;
    }
    return out;
  }

  std::optional<Atom> typeAtom(const frontend::RelationalLiteral& lit) {
    const RelationDecl* decl = lookup(lit.relation);
    if (decl == nullptr) return std::nullopt;
    if (decl->arity() != lit.args.size()) {
      error("ArityMismatch", "'" + lit.relation + "' has arity " + std::to_string(decl->arity()) +
                                 ", used with " + std::to_string(lit.args.size()) + " arguments");
      return std::nullopt;
    }
    Atom a;
    a.relation = lit.relation;
    for (size_t i = 0; i < lit.args.size(); ++i) {
      auto t = typeTerm(lit.args[i], decl->schema[i].type,
                        "column '" + decl->schema[i].name + "' of " + lit.relation);
      if (!t) return std::nullopt;
      a.args.push_back(std::move(*t));
    }
    return a;
  }

  bool typeHead(Atom& head) {
    for (const auto& t : src_.head.args) {
      if (t.isWildcard()) {
        error("WildcardInHead", "rule head may not contain '_'");
        return false;
      }
      if (t.isVariable() && !types_.count(t.text)) {
        error("UngroundedHeadVariable",
              "head variable '" + t.text + "' of rule " + src_.id + " is not grounded by the body");
        return false;
      }
    }
    auto h = typeAtom(src_.head);
    if (!h) return false;
    head = std::move(*h);
    return true;
  }

  std::optional<ColumnType> operandType(const Term& a, const Term& b) const {
    if (auto t = typeOf(a)) return t;
    return typeOf(b);
  }

  std::optional<BodyLiteral> typeLiteral(const frontend::Literal& lit) {
    if (const auto* r = std::get_if<frontend::RelationalLiteral>(&lit)) {
      auto a = typeAtom(*r);
      if (!a) return std::nullopt;
      return BodyLiteral{std::move(*a)};
    }
    if (const auto* c = std::get_if<frontend::ConditionLiteral>(&lit)) {
      auto t = operandType(c->lhs, c->rhs);
      if (!t) t = ColumnType::Int;  // two integer constants
      if (*t == ColumnType::Bool && c->op != CompareOp::Eq && c->op != CompareOp::Ne) {
        error("TypeMismatch", "ordering comparison on bool");
        return std::nullopt;
      }
      auto lhs = typeTerm(c->lhs, *t, "condition");
      if (!lhs) return std::nullopt;
      auto rhs = typeTerm(c->rhs, *t, "condition");
      if (!rhs) return std::nullopt;
      return BodyLiteral{Condition{*lhs, c->op, *rhs}};
    }
    if (const auto* f = std::get_if<frontend::FunctionLiteral>(&lit)) {
      auto t = operandType(f->lhs, f->rhs);
      if (!t) t = types_.count(f->target) ? std::optional(types_.at(f->target)) : std::nullopt;
      if (!t) t = ColumnType::Int;
      if (*t != ColumnType::Int && *t != ColumnType::Uint) {
        error("TypeMismatch", "arithmetic on " + std::string(typeName(*t)));
        return std::nullopt;
      }
      auto lhs = typeTerm(f->lhs, *t, "arithmetic");
      if (!lhs) return std::nullopt;
      auto rhs = typeTerm(f->rhs, *t, "arithmetic");
      if (!rhs) return std::nullopt;
      if (types_.at(f->target) != *t) {
        error("TypeMismatch", "'" + f->target + "' is " + std::string(typeName(types_.at(f->target))) +
                                  " but is assigned a " + std::string(typeName(*t)));
        return std::nullopt;
      }
      return BodyLiteral{Function{f->target, f->op, *lhs, *rhs}};
    }
    const auto& g = std::get<frontend::AggregationLiteral>(lit);
    auto over = typeAtom(g.over);
    if (!over) return std::nullopt;
    Aggregation a;
    a.target = g.target;
    a.agg = g.agg;
    a.boundVar = g.boundVar;
    a.over = std::move(*over);
    size_t boundCount = 0;
    for (const auto& t : a.over.args) {
      if (!t.isVariable()) continue;
      if (t.var == g.boundVar) {
        ++boundCount;
      } else if (std::find(a.groupVars.begin(), a.groupVars.end(), t.var) == a.groupVars.end()) {
        a.groupVars.push_back(t.var);
      }
    }
    if (boundCount != 1) {
      error("AggregationBoundVariable", "aggregated variable '" + g.boundVar +
                                            "' must appear exactly once in " + g.over.relation);
      return std::nullopt;
    }
    const ColumnType bt = types_.at(g.boundVar);
    if ((g.agg == AggKind::Sum && bt != ColumnType::Int && bt != ColumnType::Uint) ||
        ((g.agg == AggKind::Max || g.agg == AggKind::Min) && bt == ColumnType::Bool)) {
      error("TypeMismatch", std::string(aggKindName(g.agg)) + " over " + std::string(typeName(bt)));
      return std::nullopt;
    }
    const ColumnType expected = g.agg == AggKind::Count ? ColumnType::Uint : bt;
    if (types_.at(g.target) != expected) {
      error("TypeMismatch", "aggregate target '" + g.target + "' must be " +
                                std::string(typeName(expected)));
      return std::nullopt;
    }
    return BodyLiteral{std::move(a)};
  }

  bool checkStructure(Rule& rule) {
    const auto& headDecl = relations_.at(rule.head.relation);
    if (isReadOnlyReserved(rule.head.relation)) {
      error("WriteToReadOnlyReserved", "'" + rule.head.relation + "' is bound by the runtime");
      return false;
    }
    if (headDecl.kind == RelationKind::Transaction) {
      error("WriteToTransactionRelation", "'" + rule.head.relation + "' is a transaction relation");
      return false;
    }
    std::vector<size_t> txLiterals;
    std::vector<std::string> reservedReads;
    for (size_t i = 0; i < rule.body.size(); ++i) {
      const Atom* atom = std::get_if<Atom>(&rule.body[i]);
      if (const auto* g = std::get_if<Aggregation>(&rule.body[i])) {
        const auto& d = relations_.at(g->over.relation);
        if (d.kind == RelationKind::Transaction || d.kind == RelationKind::Reserved) {
          error("InvalidAggregationSource", "cannot aggregate over '" + g->over.relation + "'");
          return false;
        }
        for (const auto& other : rule.body) {
          if (&other == &rule.body[i]) continue;
          if (mentions(other, g->boundVar)) {
            error("AggregationBoundVariable",
                  "aggregated variable '" + g->boundVar + "' is local to its aggregation");
            return false;
          }
        }
        for (const auto& t : rule.head.args) {
          if (t.isVariable() && t.var == g->boundVar) {
            error("AggregationBoundVariable",
                  "aggregated variable '" + g->boundVar + "' is local to its aggregation");
            return false;
          }
        }
      }
      if (atom == nullptr) continue;
      const auto& d = relations_.at(atom->relation);
      if (d.kind == RelationKind::Transaction) txLiterals.push_back(i);
      if (atom->relation == "send") {
        error("ReadFromWriteOnlyReserved", "'send' may only appear in rule heads");
        return false;
      }
      if (isReadOnlyReserved(atom->relation)) reservedReads.push_back(atom->relation);
    }
    if (txLiterals.size() > 1) {
      error("MultipleTransactionTriggers", "rule reads more than one transaction relation");
      return false;
    }
    if (txLiterals.empty()) {
      rule.kind = RuleKind::View;
      if (!reservedReads.empty()) {
        error("ReservedOutsideTransactionRule",
              "'" + reservedReads.front() + "' is only bound inside transaction rules");
        return false;
      }
    } else {
      rule.kind = RuleKind::Transaction;
      rule.transactionLiteral = txLiterals.front();
    }
    return true;
  }

  static bool mentions(const BodyLiteral& lit, const std::string& var) {
    auto termIs = [&](const TypedTerm& t) { return t.isVariable() && t.var == var; };
    if (const auto* a = std::get_if<Atom>(&lit)) {
      return std::any_of(a->args.begin(), a->args.end(), termIs);
    }
    if (const auto* c = std::get_if<Condition>(&lit)) return termIs(c->lhs) || termIs(c->rhs);
    if (const auto* f = std::get_if<Function>(&lit)) {
      return f->target == var || termIs(f->lhs) || termIs(f->rhs);
    }
    const auto& g = std::get<Aggregation>(lit);
    return g.target == var || std::any_of(g.over.args.begin(), g.over.args.end(), termIs);
  }

  // Variables grounded by the body, optionally ignoring one aggregation.
  static std::set<std::string> groundedVars(const Rule& rule, const Aggregation* skip) {
    std::set<std::string> g;
    auto grounded = [&](const TypedTerm& t) { return !t.isVariable() || g.count(t.var) != 0; };
    for (const auto& lit : rule.body) {
      if (const auto* a = std::get_if<Atom>(&lit)) {
        for (const auto& t : a->args) {
          if (t.isVariable()) g.insert(t.var);
        }
      }
      if (const auto* agg = std::get_if<Aggregation>(&lit); agg != nullptr && agg != skip &&
                                                           !agg->guarded && skip == nullptr) {
        for (const auto& v : agg->groupVars) g.insert(v);
        g.insert(agg->target);
      }
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& lit : rule.body) {
        if (const auto* f = std::get_if<Function>(&lit)) {
          if (!g.count(f->target) && grounded(f->lhs) && grounded(f->rhs)) {
            g.insert(f->target);
            changed = true;
          }
        } else if (const auto* c = std::get_if<Condition>(&lit); c != nullptr && c->op == CompareOp::Eq) {
          if (c->lhs.isVariable() && !g.count(c->lhs.var) && grounded(c->rhs)) {
            g.insert(c->lhs.var);
            changed = true;
          } else if (c->rhs.isVariable() && !g.count(c->rhs.var) && grounded(c->lhs)) {
            g.insert(c->rhs.var);
            changed = true;
          }
        } else if (const auto* agg = std::get_if<Aggregation>(&lit); agg != nullptr && agg != skip) {
          const bool keysBound = std::all_of(agg->groupVars.begin(), agg->groupVars.end(),
                                             [&](const std::string& v) { return g.count(v) != 0; });
          if (keysBound && !g.count(agg->target)) {
            g.insert(agg->target);
            changed = true;
          }
        }
      }
    }
    return g;
  }

  static void markGuards(Rule& rule) {
    const bool hasAtom = std::any_of(rule.body.begin(), rule.body.end(),
                                     [](const BodyLiteral& l) { return std::holds_alternative<Atom>(l); });
    for (auto& lit : rule.body) {
      auto* agg = std::get_if<Aggregation>(&lit);
      if (agg == nullptr) continue;
      if (!hasAtom) {
        agg->guarded = false;
        continue;
      }
      const auto g = groundedVars(rule, agg);
      agg->guarded = std::all_of(agg->groupVars.begin(), agg->groupVars.end(),
                                 [&](const std::string& v) { return g.count(v) != 0; });
    }
  }

  bool checkGrounded(const Rule& rule) {
    // Unguarded aggregations bind their own group variables.
    std::set<std::string> g = groundedVars(rule, nullptr);
    for (const auto& lit : rule.body) {
      if (const auto* agg = std::get_if<Aggregation>(&lit); agg != nullptr && !agg->guarded) {
        g.insert(agg->groupVars.begin(), agg->groupVars.end());
        g.insert(agg->target);
      }
    }
    bool changed = true;
    auto grounded = [&](const TypedTerm& t) { return !t.isVariable() || g.count(t.var) != 0; };
    while (changed) {
      changed = false;
      for (const auto& lit : rule.body) {
        if (const auto* f = std::get_if<Function>(&lit)) {
          if (!g.count(f->target) && grounded(f->lhs) && grounded(f->rhs)) {
            g.insert(f->target);
            changed = true;
          }
        } else if (const auto* c = std::get_if<Condition>(&lit); c != nullptr && c->op == CompareOp::Eq) {
          if (c->lhs.isVariable() && !g.count(c->lhs.var) && grounded(c->rhs)) {
            g.insert(c->lhs.var);
            changed = true;
          } else if (c->rhs.isVariable() && !g.count(c->rhs.var) && grounded(c->lhs)) {
            g.insert(c->rhs.var);
            changed = true;
          }
        } else if (const auto* agg = std::get_if<Aggregation>(&lit)) {
          const bool keysBound = std::all_of(agg->groupVars.begin(), agg->groupVars.end(),
                                             [&](const std::string& v) { return g.count(v) != 0; });
          if (keysBound && !g.count(agg->target)) {
            g.insert(agg->target);
            changed = true;
          }
        }
      }
    }
    for (const auto& t : rule.head.args) {
      if (t.isVariable() && !g.count(t.var)) {
        error("UngroundedHeadVariable",
              "head variable '" + t.var + "' of rule " + rule.id + " is not grounded by the body");
        return false;
      }
    }
    for (const auto& lit : rule.body) {
      std::vector<const TypedTerm*> uses;
      if (const auto* c = std::get_if<Condition>(&lit)) uses = {&c->lhs, &c->rhs};
      if (const auto* f = std::get_if<Function>(&lit)) uses = {&f->lhs, &f->rhs};
      for (const auto* t : uses) {
        if (!grounded(*t)) {
          error("UngroundedVariable", "variable '" + t->var + "' in rule " + rule.id +
                                          " is never bound by a relational literal");
          return false;
        }
      }
    }
    return true;
  }

  const std::map<std::string, RelationDecl>& relations_;
  const RuleDecl& src_;
  std::vector<Diagnostic>& diags_;
  std::map<std::string, ColumnType> types_;
  bool failed_ = false;
};

std::optional<std::vector<std::string>> findCycle(const ContractModel& m) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : m.depGraph.edges) adj[e.from].push_back(e.to);
  std::map<std::string, int> color;  // 0 white, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::optional<std::vector<std::string>> cycle;

  std::function<void(const std::string&)> dfs = [&](const std::string& n) {
    color[n] = 1;
    stack.push_back(n);
    for (const auto& next : adj[n]) {
      if (cycle) return;
      if (color[next] == 1) {
        auto it = std::find(stack.begin(), stack.end(), next);
        std::vector<std::string> path(it, stack.end());
        path.push_back(next);
        cycle = path;
        return;
      }
      if (color[next] == 0) dfs(next);
    }
    stack.pop_back();
    color[n] = 2;
  };
  for (const auto& n : m.depGraph.nodes) {
    if (cycle) break;
    if (color[n] == 0) dfs(n);
  }
  return cycle;
}

std::vector<std::string> topoSort(const ContractModel& m) {
  std::map<std::string, size_t> declIndex;
  for (size_t i = 0; i < m.depGraph.nodes.size(); ++i) declIndex[m.depGraph.nodes[i]] = i;
  std::map<std::string, int> indegree;
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& n : m.depGraph.nodes) indegree[n] = 0;
  for (const auto& e : m.depGraph.edges) {
    if (adj[e.from].insert(e.to).second) ++indegree[e.to];
  }
  using Item = std::pair<size_t, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.emplace(declIndex[n], n);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto [_, n] = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& next : adj[n]) {
      if (--indegree[next] == 0) ready.emplace(declIndex[next], next);
    }
  }
  return order;
}

// True when some update function of `rule` searches or aggregates over the
// body occurrence at `index`: every non-trigger occurrence of a transaction
// rule, and for view rules any occurrence that is not the only relational
// literal, plus every aggregation source.
bool occurrenceIsRead(const Rule& rule, size_t index) {
  if (std::holds_alternative<Aggregation>(rule.body[index])) return true;
  if (rule.kind == RuleKind::Transaction) return rule.transactionLiteral != index;
  size_t relational = 0;
  for (const auto& lit : rule.body) {
    if (std::holds_alternative<Atom>(lit) || std::holds_alternative<Aggregation>(lit)) ++relational;
  }
  return relational > 1;
}

std::string occurrenceRelation(const BodyLiteral& lit) {
  if (const auto* a = std::get_if<Atom>(&lit)) return a->relation;
  if (const auto* g = std::get_if<Aggregation>(&lit)) return g->over.relation;
  return {};
}

std::set<std::string> neededRelations(const ContractModel& m) {
  std::set<std::string> needed(m.publicViews.begin(), m.publicViews.end());
  needed.insert(m.violations.begin(), m.violations.end());
  needed.insert("send");
  for (const auto& r : m.rules) {
    if (r.kind == RuleKind::Transaction) needed.insert(r.head.relation);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : m.rules) {
      if (!needed.count(r.head.relation)) continue;
      for (const auto& lit : r.body) {
        const std::string rel = occurrenceRelation(lit);
        if (rel.empty()) continue;
        const auto kind = m.relation(rel).kind;
        if (kind == RelationKind::Transaction || kind == RelationKind::Reserved) continue;
        if (needed.insert(rel).second) changed = true;
      }
    }
  }
  return needed;
}

}  // namespace

std::vector<std::string> Rule::bodyRelations() const {
  std::vector<std::string> out;
  for (const auto& lit : body) {
    const std::string rel = occurrenceRelation(lit);
    if (!rel.empty()) out.push_back(rel);
  }
  return out;
}

const RelationDecl& ContractModel::relation(const std::string& name) const {
  auto it = relations.find(name);
  if (it == relations.end()) throw Error("UnknownRelation", "relation '" + name + "' is not declared");
  return it->second;
}

bool ContractModel::isTransaction(const std::string& name) const {
  auto it = relations.find(name);
  return it != relations.end() && it->second.kind == RelationKind::Transaction;
}

size_t ContractModel::topoRank(const std::string& name) const {
  auto it = std::find(topoOrder.begin(), topoOrder.end(), name);
  return static_cast<size_t>(it - topoOrder.begin());
}

std::optional<std::string> ContractModel::transactionRelationFor(const std::string& requestName) const {
  if (frontend::isConstructorName(requestName)) return constructorRelation();
  for (const auto& name : relationOrder) {
    const auto& d = relations.at(name);
    if (d.kind != RelationKind::Transaction || frontend::isConstructorName(name)) continue;
    if (name == requestName || d.interfaceName() == requestName) return name;
  }
  return std::nullopt;
}

std::optional<std::string> ContractModel::constructorRelation() const {
  for (const char* n : {"constructor", "recv_constructor"}) {
    if (relations.count(n)) return std::string(n);
  }
  return std::nullopt;
}

std::string Diagnostic::format() const { return severity + ":" + where + ":" + code + ":" + message; }

AnalysisError::AnalysisError(std::vector<Diagnostic> diagnostics)
    : Error(diagnostics.empty() ? "AnalysisError" : diagnostics.front().code,
            diagnostics.empty() ? "analysis failed" : diagnostics.front().format()),
      diagnostics_(std::move(diagnostics)) {}

ContractModel validate(const frontend::SourceProgram& program) {
  ContractModel m;
  std::vector<Diagnostic> diags;

  for (auto d : {reserved("msgSender", {{"a", ColumnType::Address}}),
                 reserved("msgValue", {{"v", ColumnType::Uint}}),
                 reserved("now", {{"t", ColumnType::Uint}}),
                 reserved("send", {{"to", ColumnType::Address}, {"amount", ColumnType::Uint}})}) {
    m.relationOrder.push_back(d.name);
    m.relations.emplace(d.name, std::move(d));
  }
  for (const auto& d : program.decls) {
    if (m.relations.count(d.name)) {
      diags.push_back({"error", d.name, "DuplicateRelation", "relation declared twice"});
      continue;
    }
    m.relationOrder.push_back(d.name);
    m.relations.emplace(d.name, d);
  }
  if (m.relations.count("constructor") && m.relations.count("recv_constructor")) {
    diags.push_back({"error", "constructor", "DuplicateRelation",
                     "declare either constructor or recv_constructor, not both"});
  }

  for (const Annotation& a : program.annotations) {
    auto it = m.relations.find(a.relationName);
    if (it == m.relations.end()) {
      diags.push_back({"error", a.relationName, "UnknownRelation",
                       "annotated relation '" + a.relationName + "' is not declared"});
      continue;
    }
    if (it->second.kind == RelationKind::Transaction || it->second.kind == RelationKind::Reserved) {
      diags.push_back({"error", a.relationName, "AnnotationOnTransactionRelation",
                       "'" + a.relationName + "' cannot be annotated"});
      continue;
    }
    (a.kind == AnnotationKind::Public ? m.publicViews : m.violations).insert(a.relationName);
  }

  std::set<std::string> ruleIds;
  for (size_t i = 0; i < program.rules.size(); ++i) {
    const auto& src = program.rules[i];
    if (!ruleIds.insert(src.id).second) {
      diags.push_back({"error", src.id, "DuplicateRuleId", "rule id used twice"});
      continue;
    }
    RuleChecker checker(m.relations, src, diags);
    if (auto r = checker.run(i)) m.rules.push_back(std::move(*r));
  }
  if (!diags.empty()) throw AnalysisError(std::move(diags));

  m.depGraph.nodes = m.relationOrder;
  for (const auto& r : m.rules) {
    std::vector<std::string> sources;
    if (r.kind == RuleKind::Transaction) {
      sources.push_back(std::get<Atom>(r.body[*r.transactionLiteral]).relation);
    } else {
      sources = r.bodyRelations();
    }
    for (const auto& s : sources) {
      DependencyEdge e{s, r.head.relation, r.id};
      if (std::find(m.depGraph.edges.begin(), m.depGraph.edges.end(), e) == m.depGraph.edges.end()) {
        m.depGraph.edges.push_back(std::move(e));
      }
    }
  }
  if (auto cycle = findCycle(m)) {
    throw AnalysisError({{"error", cycle->front(), "RecursionDetected",
                          "recursive dependency " + join(*cycle, " -> ")}});
  }
  m.topoOrder = topoSort(m);
  m.needed = neededRelations(m);
  m.materialized = materializationSet(m);
  return m;
}

std::set<std::string> materializationSet(const ContractModel& model) {
  const std::set<std::string> needed = neededRelations(model);
  std::set<std::string> out(model.publicViews.begin(), model.publicViews.end());
  out.insert(model.violations.begin(), model.violations.end());
  for (const auto& r : model.rules) {
    if (!needed.count(r.head.relation)) continue;
    // Keyed base facts must be remembered to be replaced later.
    const auto& head = model.relation(r.head.relation);
    if (r.kind == RuleKind::Transaction && head.kind != RelationKind::Reserved &&
        head.primaryKeys.size() != head.arity()) {
      out.insert(head.name);
    }
    for (size_t i = 0; i < r.body.size(); ++i) {
      const std::string rel = occurrenceRelation(r.body[i]);
      if (rel.empty()) continue;
      const auto kind = model.relation(rel).kind;
      if (kind == RelationKind::Transaction || kind == RelationKind::Reserved) continue;
      if (occurrenceIsRead(r, i)) out.insert(rel);
    }
  }
  return out;
}

std::vector<FunctionSignature> publicInterface(const ContractModel& model) {
  std::vector<FunctionSignature> out;
  for (const auto& name : model.relationOrder) {
    const auto& d = model.relations.at(name);
    if (d.kind != RelationKind::Transaction || frontend::isConstructorName(name)) continue;
    out.push_back({FunctionSignature::Kind::Transaction, d.interfaceName(), d.schema,
                   {Column{"", ColumnType::Bool}}});
  }
  for (const auto& name : model.relationOrder) {
    if (!model.publicViews.count(name)) continue;
    const auto& d = model.relations.at(name);
    FunctionSignature sig{FunctionSignature::Kind::View, name, {}, {}};
    if (d.kind == RelationKind::Singleton) {
      sig.results = d.schema;
    } else {
      for (size_t i = 0; i < d.schema.size(); ++i) {
        (d.isKey(i) ? sig.params : sig.results).push_back(d.schema[i]);
      }
      if (sig.results.empty()) sig.results.push_back(Column{"", ColumnType::Bool});
    }
    out.push_back(std::move(sig));
  }
  return out;
}

std::string formatSignature(const FunctionSignature& sig) {
  std::ostringstream out;
  out << sig.name << "(";
  for (size_t i = 0; i < sig.params.size(); ++i) {
    if (i != 0) out << ", ";
    out << sig.params[i].name << ": " << typeName(sig.params[i].type);
  }
  out << ") -> ";
  if (sig.results.size() == 1) {
    out << typeName(sig.results[0].type);
  } else {
    out << "(";
    for (size_t i = 0; i < sig.results.size(); ++i) {
      if (i != 0) out << ", ";
      out << typeName(sig.results[i].type);
    }
    out << ")";
  }
  return out.str();
}

std::string formatTypedTerm(const TypedTerm& t) {
  if (t.isWildcard()) return "_";
  if (t.isConstant()) return t.constant.toString();
  return t.var;
}

std::string formatAtom(const Atom& atom) {
  std::string out = atom.relation + "(";
  for (size_t i = 0; i < atom.args.size(); ++i) {
    if (i != 0) out += ",";
    out += formatTypedTerm(atom.args[i]);
  }
  return out + ")";
}

std::string formatBodyLiteral(const BodyLiteral& lit) {
  if (const auto* a = std::get_if<Atom>(&lit)) return formatAtom(*a);
  if (const auto* c = std::get_if<Condition>(&lit)) {
    return formatTypedTerm(c->lhs) + std::string(frontend::compareOpSymbol(c->op)) +
           formatTypedTerm(c->rhs);
  }
  if (const auto* f = std::get_if<Function>(&lit)) {
    return f->target + " := " + formatTypedTerm(f->lhs) + std::string(arithOpSymbol(f->op)) +
           formatTypedTerm(f->rhs);
  }
  const auto& g = std::get<Aggregation>(lit);
  return g.target + " = " + std::string(frontend::aggKindName(g.agg)) + " " + g.boundVar + ": " +
         formatAtom(g.over);
}

}  // namespace decon::analysis
