#include "decon/ir/ir.hpp"

#include <algorithm>
#include <sstream>

namespace decon::ir {

using analysis::Aggregation;
using analysis::Atom;
using analysis::BodyLiteral;
using analysis::Condition;
using analysis::ContractModel;
using analysis::Function;
using analysis::Rule;
using analysis::RuleKind;
using analysis::TypedTerm;
using frontend::CompareOp;
using frontend::RelationKind;

namespace {

using Grounded = std::set<std::string>;

bool isGrounded(const TypedTerm& t, const Grounded& g) {
  return !t.isVariable() || g.count(t.var) != 0;
}

bool relationalOccurrence(const BodyLiteral& lit) {
  return std::holds_alternative<Atom>(lit) || std::holds_alternative<Aggregation>(lit);
}

const std::string& occurrenceRelation(const BodyLiteral& lit) {
  if (const auto* a = std::get_if<Atom>(&lit)) return a->relation;
  return std::get<Aggregation>(lit).over.relation;
}

bool groupGrounded(const Aggregation& agg, const Grounded& g) {
  return std::all_of(agg.groupVars.begin(), agg.groupVars.end(),
                     [&](const std::string& v) { return g.count(v) != 0; });
}

bool conditionBinds(const Condition& c, const Grounded& g) {
  if (c.op != CompareOp::Eq) return false;
  return (c.lhs.isVariable() && !g.count(c.lhs.var) && isGrounded(c.rhs, g)) ||
         (c.rhs.isVariable() && !g.count(c.rhs.var) && isGrounded(c.lhs, g));
}

bool ready(const BodyLiteral& lit, const Grounded& g) {
  if (const auto* c = std::get_if<Condition>(&lit)) {
    return (isGrounded(c->lhs, g) && isGrounded(c->rhs, g)) || conditionBinds(*c, g);
  }
  if (const auto* f = std::get_if<Function>(&lit)) {
    return isGrounded(f->lhs, g) && isGrounded(f->rhs, g);
  }
  if (const auto* a = std::get_if<Aggregation>(&lit)) return groupGrounded(*a, g);
  return false;
}

void groundLiteral(const BodyLiteral& lit, Grounded& g) {
  if (const auto* a = std::get_if<Atom>(&lit)) {
    for (const auto& t : a->args) {
      if (t.isVariable()) g.insert(t.var);
    }
  } else if (const auto* c = std::get_if<Condition>(&lit)) {
    if (c->lhs.isVariable()) g.insert(c->lhs.var);
    if (c->rhs.isVariable()) g.insert(c->rhs.var);
  } else if (const auto* f = std::get_if<Function>(&lit)) {
    g.insert(f->target);
  } else {
    const auto& agg = std::get<Aggregation>(lit);
    g.insert(agg.groupVars.begin(), agg.groupVars.end());
    g.insert(agg.target);
  }
}

bool keysGrounded(const ContractModel& m, const Atom& a, const Grounded& g) {
  const auto& decl = m.relation(a.relation);
  for (size_t k : decl.primaryKeys) {
    const auto& t = a.args[k];
    if (t.isWildcard() || !isGrounded(t, g)) return false;
  }
  return true;
}

bool tierOne(const ContractModel& m, const BodyLiteral& lit) {
  const auto* a = std::get_if<Atom>(&lit);
  if (a == nullptr) return false;
  const auto kind = m.relation(a->relation).kind;
  return kind == RelationKind::Reserved || kind == RelationKind::Singleton;
}

std::vector<size_t> orderIndices(const ContractModel& m, const Rule& rule, std::optional<size_t> skip,
                                 Grounded g) {
  std::vector<size_t> remaining;
  for (size_t i = 0; i < rule.body.size(); ++i) {
    if (!skip || *skip != i) remaining.push_back(i);
  }
  std::vector<size_t> out;
  auto place = [&](size_t pos) {
    const size_t idx = remaining[pos];
    groundLiteral(rule.body[idx], g);
    out.push_back(idx);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  auto flush = [&] {
    bool placed = true;
    while (placed) {
      placed = false;
      for (size_t pos = 0; pos < remaining.size(); ++pos) {
        const auto& lit = rule.body[remaining[pos]];
        if (!std::holds_alternative<Atom>(lit) && ready(lit, g)) {
          place(pos);
          placed = true;
          break;
        }
      }
    }
  };

  for (size_t pos = 0; pos < remaining.size();) {
    if (tierOne(m, rule.body[remaining[pos]])) {
      place(pos);
    } else {
      ++pos;
    }
  }
  flush();
  while (true) {
    std::optional<size_t> pick;
    for (size_t pos = 0; pos < remaining.size() && !pick; ++pos) {
      const auto* a = std::get_if<Atom>(&rule.body[remaining[pos]]);
      if (a != nullptr && keysGrounded(m, *a, g)) pick = pos;
    }
    for (size_t pos = 0; pos < remaining.size() && !pick; ++pos) {
      if (relationalOccurrence(rule.body[remaining[pos]])) pick = pos;
    }
    if (!pick) break;
    place(*pick);
    flush();
  }
  if (!remaining.empty()) {
    throw Error("InternalError", "rule " + rule.id + ": literal " +
                                     analysis::formatBodyLiteral(rule.body[remaining.front()]) +
                                     " cannot be grounded");
  }
  return out;
}

Statement makeSearch(const Atom& atom, Grounded& g) {
  Statement s;
  s.kind = Statement::Kind::Search;
  s.atom = atom;
  std::map<std::string, size_t> boundHere;
  for (size_t i = 0; i < atom.args.size(); ++i) {
    const auto& t = atom.args[i];
    if (t.isWildcard()) continue;
    if (t.isConstant() || g.count(t.var)) {
      s.constraints.push_back(Constraint{i, t});
    } else if (auto it = boundHere.find(t.var); it != boundHere.end()) {
      s.sameRow.emplace_back(i, it->second);
    } else {
      boundHere.emplace(t.var, i);
      s.binds.emplace_back(i, t.var);
    }
  }
  s.existential = s.binds.empty();
  for (const auto& [col, var] : s.binds) g.insert(var);
  return s;
}

Statement makeNode(const BodyLiteral& lit, size_t index, Grounded& g) {
  if (const auto* a = std::get_if<Atom>(&lit)) return makeSearch(*a, g);
  Statement s;
  if (const auto* c = std::get_if<Condition>(&lit)) {
    if (conditionBinds(*c, g)) {
      const bool left = c->lhs.isVariable() && !g.count(c->lhs.var);
      s.kind = Statement::Kind::Assign;
      s.target = left ? c->lhs.var : c->rhs.var;
      s.source = left ? c->rhs : c->lhs;
      g.insert(s.target);
    } else {
      s.kind = Statement::Kind::If;
      s.condition = *c;
    }
    return s;
  }
  if (const auto* f = std::get_if<Function>(&lit)) {
    s.kind = Statement::Kind::Assign;
    s.target = f->target;
    s.function = *f;
    s.checkOnly = g.count(f->target) != 0;
    g.insert(f->target);
    return s;
  }
  const auto& agg = std::get<Aggregation>(lit);
  s.kind = Statement::Kind::AggAssign;
  s.aggregation = agg;
  s.literalIndex = index;
  s.target = agg.target;
  s.enumerateGroups = !groupGrounded(agg, g);
  s.checkOnly = g.count(agg.target) != 0;
  groundLiteral(lit, g);
  return s;
}

Statement buildChain(const Rule& rule, const std::vector<size_t>& order, Grounded g, Statement terminal) {
  std::vector<Statement> nodes;
  nodes.reserve(order.size());
  for (size_t idx : order) nodes.push_back(makeNode(rule.body[idx], idx, g));
  Statement current = std::move(terminal);
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    it->children.push_back(std::move(current));
    current = std::move(*it);
  }
  return current;
}

std::string camel(const std::string& name) {
  std::string out;
  bool upper = true;
  for (char c : name) {
    if (c == '_') {
      upper = true;
      continue;
    }
    out += upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    upper = false;
  }
  return out;
}

std::vector<std::string> uniqueVars(const Atom& a) {
  std::vector<std::string> out;
  for (const auto& t : a.args) {
    if (t.isVariable() && std::find(out.begin(), out.end(), t.var) == out.end()) out.push_back(t.var);
  }
  return out;
}

void collectIndexes(const ContractModel& m, const Statement& s, std::set<JoinIndexRequirement>& out) {
  if (s.kind == Statement::Kind::Search && m.isStored(s.atom.relation)) {
    const auto& decl = m.relation(s.atom.relation);
    std::vector<size_t> constrained;
    for (size_t k : decl.primaryKeys) {
      for (const auto& c : s.constraints) {
        if (c.column == k) {
          constrained.push_back(k);
          break;
        }
      }
    }
    if (!constrained.empty() && constrained.size() < decl.primaryKeys.size()) {
      out.insert(JoinIndexRequirement{s.atom.relation, constrained});
    }
  }
  for (const auto& c : s.children) collectIndexes(m, c, out);
}

}  // namespace

std::string_view triggerKindName(TriggerKind k) { return k == TriggerKind::Insert ? "insert" : "delete"; }

const std::vector<UpdateFunction>& CompiledContract::functionsFor(const std::string& relation,
                                                                  TriggerKind kind) const {
  static const std::vector<UpdateFunction> kNone;
  auto it = updateFunctions.find({relation, kind});
  return it == updateFunctions.end() ? kNone : it->second;
}

std::vector<const UpdateFunction*> CompiledContract::allFunctions() const {
  std::vector<const UpdateFunction*> out;
  for (const auto& [key, list] : updateFunctions) {
    for (const auto& f : list) out.push_back(&f);
  }
  return out;
}

std::set<Trigger> triggers(const ContractModel& model, const Rule& rule) {
  std::set<Trigger> out;
  if (rule.kind == RuleKind::Transaction) {
    out.insert(Trigger{TriggerKind::Insert, std::get<Atom>(rule.body[*rule.transactionLiteral]).relation});
    return out;
  }
  for (const auto& lit : rule.body) {
    if (!relationalOccurrence(lit)) continue;
    const auto& rel = occurrenceRelation(lit);
    if (model.relation(rel).kind == RelationKind::Reserved) continue;
    out.insert(Trigger{TriggerKind::Insert, rel});
    out.insert(Trigger{TriggerKind::Delete, rel});
  }
  return out;
}

std::vector<BodyLiteral> orderBody(const ContractModel& model, const Rule& rule,
                                   std::optional<size_t> triggerLiteral) {
  Grounded g;
  std::vector<BodyLiteral> out;
  if (triggerLiteral) {
    groundLiteral(rule.body[*triggerLiteral], g);
    out.push_back(rule.body[*triggerLiteral]);
  }
  for (size_t idx : orderIndices(model, rule, triggerLiteral, g)) out.push_back(rule.body[idx]);
  return out;
}

std::vector<UpdateFunction> updateFunctions(const ContractModel& model, const Rule& rule,
                                            const Trigger& trigger) {
  if (rule.kind == RuleKind::Transaction && trigger.kind == TriggerKind::Delete) {
    throw Error("InternalError", "transaction rule " + rule.id + " has no delete trigger");
  }
  std::vector<UpdateFunction> out;
  for (size_t i = 0; i < rule.body.size(); ++i) {
    if (!relationalOccurrence(rule.body[i]) || occurrenceRelation(rule.body[i]) != trigger.relation) {
      continue;
    }
    if (rule.kind == RuleKind::Transaction && i != *rule.transactionLiteral) continue;
    UpdateFunction f;
    f.ruleId = rule.id;
    f.trigger = trigger;
    f.triggerLiteral = i;
    Grounded g;
    std::optional<size_t> skip;
    if (const auto* a = std::get_if<Atom>(&rule.body[i])) {
      f.triggerAtom = *a;
      f.params = uniqueVars(*a);
      skip = i;
    } else {
      const auto& agg = std::get<Aggregation>(rule.body[i]);
      f.viaAggregation = true;
      f.triggerAtom = agg.over;
      for (auto& t : f.triggerAtom.args) {
        if (t.isVariable() && t.var == agg.boundVar) t = TypedTerm{frontend::Term::Kind::Wildcard, {}, {}};
      }
      f.params = agg.groupVars;
    }
    g.insert(f.params.begin(), f.params.end());
    Statement terminal;
    terminal.kind = trigger.kind == TriggerKind::Insert ? Statement::Kind::InsertTuple
                                                        : Statement::Kind::DeleteTuple;
    terminal.atom = rule.head;
    f.body = buildChain(rule, orderIndices(model, rule, skip, g), g, std::move(terminal));
    f.name = "update" + camel(rule.head.relation) + "On" + camel(trigger.relation) +
             (trigger.kind == TriggerKind::Insert ? "Insert" : "Delete") + "_" + rule.id;
    if (!out.empty()) f.name += "_" + std::to_string(out.size() + 1);
    out.push_back(std::move(f));
  }
  if (out.empty()) {
    throw Error("InternalError", trigger.relation + " is not a trigger of rule " + rule.id);
  }
  return out;
}

UpdateFunction updateFunction(const ContractModel& model, const Rule& rule, const Trigger& trigger) {
  return updateFunctions(model, rule, trigger).front();
}

Statement derivationPlan(const ContractModel& model, const Rule& rule,
                         const std::set<size_t>& boundHeadColumns) {
  Grounded g;
  for (size_t c : boundHeadColumns) {
    const auto& t = rule.head.args.at(c);
    if (t.isVariable()) g.insert(t.var);
  }
  Statement terminal;
  terminal.kind = Statement::Kind::InsertTuple;
  terminal.atom = rule.head;
  return buildChain(rule, orderIndices(model, rule, std::nullopt, g), g, std::move(terminal));
}

CompiledContract compile(const ContractModel& model) {
  CompiledContract out;
  out.model = std::make_shared<const ContractModel>(model);
  out.materialized = model.materialized;
  out.violations = model.violations;
  out.interface = analysis::publicInterface(model);

  for (const auto& rule : model.rules) {
    if (!model.needed.count(rule.head.relation)) continue;
    for (const auto& trig : triggers(model, rule)) {
      for (auto& f : updateFunctions(model, rule, trig)) {
        collectIndexes(model, f.body, out.joinIndexRequirements);
        out.updateFunctions[{trig.relation, trig.kind}].push_back(std::move(f));
      }
    }
    if (rule.kind == RuleKind::View) {
      std::set<size_t> all;
      for (size_t c = 0; c < rule.head.args.size(); ++c) all.insert(c);
      collectIndexes(model, derivationPlan(model, rule, all), out.joinIndexRequirements);
    }
    for (size_t i = 0; i < rule.body.size(); ++i) {
      if (const auto* agg = std::get_if<Aggregation>(&rule.body[i])) {
        out.aggregationCaches.push_back(AggCacheSpec{rule.id, i, *agg});
      }
    }
  }

  std::map<std::string, const Rule*> rulesById;
  for (const auto& r : model.rules) rulesById[r.id] = &r;
  for (auto& [key, list] : out.updateFunctions) {
    std::stable_sort(list.begin(), list.end(), [&](const UpdateFunction& a, const UpdateFunction& b) {
      const Rule& ra = *rulesById.at(a.ruleId);
      const Rule& rb = *rulesById.at(b.ruleId);
      const auto ka = std::tuple(model.topoRank(ra.head.relation), ra.ordinal, a.triggerLiteral);
      const auto kb = std::tuple(model.topoRank(rb.head.relation), rb.ordinal, b.triggerLiteral);
      return ka < kb;
    });
  }
  return out;
}

std::string formatStatement(const Statement& s, int indent) {
  std::ostringstream out;
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  out << pad;
  switch (s.kind) {
    case Statement::Kind::Search: {
      out << "search " << s.atom.relation;
      for (size_t i = 0; i < s.constraints.size(); ++i) {
        out << (i == 0 ? " where " : " and ") << "[" << s.constraints[i].column
            << "]==" << analysis::formatTypedTerm(s.constraints[i].term);
      }
      for (size_t i = 0; i < s.sameRow.size(); ++i) {
        out << (i == 0 && s.constraints.empty() ? " where " : " and ") << "[" << s.sameRow[i].first
            << "]==[" << s.sameRow[i].second << "]";
      }
      for (size_t i = 0; i < s.binds.size(); ++i) {
        out << (i == 0 ? " bind " : ", ") << s.binds[i].second << "=[" << s.binds[i].first << "]";
      }
      if (s.existential) out << " exists";
      break;
    }
    case Statement::Kind::If:
      out << "if " << analysis::formatBodyLiteral(BodyLiteral{s.condition});
      break;
    case Statement::Kind::Assign:
      out << (s.checkOnly ? "check " : "assign ");
      if (s.function) {
        out << analysis::formatBodyLiteral(BodyLiteral{*s.function});
      } else {
        out << s.target << " := " << analysis::formatTypedTerm(s.source);
      }
      break;
    case Statement::Kind::AggAssign:
      out << (s.checkOnly ? "check " : "aggregate ") << analysis::formatBodyLiteral(BodyLiteral{s.aggregation})
          << (s.enumerateGroups ? " per group" : "") << (s.aggregation.guarded ? "" : " nonempty");
      break;
    case Statement::Kind::InsertTuple:
      out << "insert " << analysis::formatAtom(s.atom);
      break;
    case Statement::Kind::DeleteTuple:
      out << "delete " << analysis::formatAtom(s.atom);
      break;
    case Statement::Kind::Sequence:
      out << "sequence";
      break;
  }
  out << "\n";
  for (const auto& c : s.children) out << formatStatement(c, indent + 1);
  return out.str();
}

std::string formatUpdateFunction(const UpdateFunction& f) {
  std::ostringstream out;
  out << "function " << f.name << "(";
  for (size_t i = 0; i < f.params.size(); ++i) out << (i == 0 ? "" : ", ") << f.params[i];
  out << ")\n  on " << triggerKindName(f.trigger.kind) << " " << analysis::formatAtom(f.triggerAtom)
      << (f.viaAggregation ? " via aggregate" : "") << "\n";
  out << formatStatement(f.body, 1);
  return out.str();
}

std::string formatIr(const CompiledContract& c) {
  std::ostringstream out;
  out << "materialized:";
  for (const auto& r : c.materialized) out << " " << r;
  out << "\nviolations:";
  for (const auto& r : c.violations) out << " " << r;
  out << "\njoin indexes:";
  for (const auto& j : c.joinIndexRequirements) {
    out << " " << j.relation << "[";
    for (size_t i = 0; i < j.constrainedKeys.size(); ++i) out << (i == 0 ? "" : ",") << j.constrainedKeys[i];
    out << "]";
  }
  out << "\naggregate caches:";
  for (const auto& a : c.aggregationCaches) out << " " << a.ruleId << "#" << a.literalIndex;
  out << "\n";
  for (const auto* f : c.allFunctions()) out << "\n" << formatUpdateFunction(*f);
  return out.str();
}

}  // namespace decon::ir
