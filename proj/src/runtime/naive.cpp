#include "decon/runtime/naive.hpp"

#include <algorithm>
#include <functional>

namespace decon::runtime {

using analysis::Aggregation;
using analysis::Atom;
using analysis::BodyLiteral;
using analysis::Condition;
using analysis::Function;
using analysis::Rule;
using analysis::TypedTerm;
using frontend::AggKind;
using frontend::CompareOp;

namespace {

using Env = std::map<std::string, Value>;
using Reserved = std::map<std::string, Value>;
using Db = NaiveEvaluator::Db;

struct Solver {
  const analysis::ContractModel& model;
  const Db& db;
  const Reserved& reserved;
  bool& faulted;

  std::vector<std::pair<Tuple, uint64_t>> rowsOf(const std::string& rel) const {
    std::vector<std::pair<Tuple, uint64_t>> out;
    if (auto r = reserved.find(rel); r != reserved.end()) {
      out.emplace_back(Tuple{r->second}, 0);
      return out;
    }
    auto it = db.find(rel);
    if (it == db.end()) return out;
    for (const auto& [key, fact] : it->second) out.emplace_back(fact.values, fact.time);
    return out;
  }

  static bool unify(const std::vector<TypedTerm>& args, const Tuple& row, Env& env,
                    std::vector<std::string>& added) {
    for (size_t i = 0; i < args.size(); ++i) {
      const auto& t = args[i];
      if (t.isConstant()) {
        if (!(t.constant == row[i])) return false;
      } else if (t.isVariable()) {
        auto it = env.find(t.var);
        if (it == env.end()) {
          env.emplace(t.var, row[i]);
          added.push_back(t.var);
        } else if (!(it->second == row[i])) {
          return false;
        }
      }
    }
    return true;
  }

  static bool bound(const TypedTerm& t, const Env& env) { return !t.isVariable() || env.count(t.var); }

  static Value value(const TypedTerm& t, const Env& env) { return t.isConstant() ? t.constant : env.at(t.var); }

  static bool holds(CompareOp op, const Value& a, const Value& b) {
    const auto c = compareValues(a, b);
    switch (op) {
      case CompareOp::Gt: return c > 0;
      case CompareOp::Lt: return c < 0;
      case CompareOp::Ge: return c >= 0;
      case CompareOp::Le: return c <= 0;
      case CompareOp::Eq: return c == 0;
      case CompareOp::Ne: return c != 0;
    }
    return false;
  }

  bool groupBound(const Aggregation& a, const Env& env) const {
    return std::all_of(a.groupVars.begin(), a.groupVars.end(), [&](const std::string& v) { return env.count(v); });
  }

  std::optional<size_t> next(const Rule& r, const std::vector<bool>& done, const Env& env) const {
    for (size_t i = 0; i < r.body.size(); ++i) {
      if (done[i]) continue;
      const auto& lit = r.body[i];
      if (const auto* c = std::get_if<Condition>(&lit)) {
        const bool lb = bound(c->lhs, env), rb = bound(c->rhs, env);
        if ((lb && rb) || (c->op == CompareOp::Eq && (lb || rb))) return i;
      } else if (const auto* f = std::get_if<Function>(&lit)) {
        if (bound(f->lhs, env) && bound(f->rhs, env)) return i;
      } else if (const auto* a = std::get_if<Aggregation>(&lit)) {
        if (groupBound(*a, env)) return i;
      }
    }
    for (size_t i = 0; i < r.body.size(); ++i) {
      if (!done[i] && std::holds_alternative<Atom>(r.body[i])) return i;
    }
    for (size_t i = 0; i < r.body.size(); ++i) {
      if (!done[i]) return i;
    }
    return std::nullopt;
  }

  using Visit = std::function<void(const Env&, uint64_t)>;

  void solve(const Rule& r, std::vector<bool>& done, Env& env, uint64_t time, const Visit& visit) const {
    const auto idx = next(r, done, env);
    if (!idx) {
      visit(env, time);
      return;
    }
    done[*idx] = true;
    const auto& lit = r.body[*idx];
    if (const auto* a = std::get_if<Atom>(&lit)) {
      for (const auto& [row, t] : rowsOf(a->relation)) {
        std::vector<std::string> added;
        if (unify(a->args, row, env, added)) solve(r, done, env, std::max(time, t), visit);
        for (const auto& v : added) env.erase(v);
      }
    } else if (const auto* c = std::get_if<Condition>(&lit)) {
      if (bound(c->lhs, env) && bound(c->rhs, env)) {
        if (holds(c->op, value(c->lhs, env), value(c->rhs, env))) solve(r, done, env, time, visit);
      } else {
        const bool left = !bound(c->lhs, env);
        const std::string var = left ? c->lhs.var : c->rhs.var;
        env[var] = value(left ? c->rhs : c->lhs, env);
        solve(r, done, env, time, visit);
        env.erase(var);
      }
    } else if (const auto* f = std::get_if<Function>(&lit)) {
      const auto res = checkedArith(f->op, value(f->lhs, env), value(f->rhs, env));
      if (res.fault) {
        faulted = true;
      } else if (auto it = env.find(f->target); it != env.end()) {
        if (it->second == res.value) solve(r, done, env, time, visit);
      } else {
        env[f->target] = res.value;
        solve(r, done, env, time, visit);
        env.erase(f->target);
      }
    } else {
      aggregate(r, std::get<Aggregation>(lit), done, env, time, visit);
    }
    done[*idx] = false;
  }

  void aggregate(const Rule& r, const Aggregation& a, std::vector<bool>& done, Env& env, uint64_t time,
                 const Visit& visit) const {
    const ColumnType boundType = r.varTypes.at(a.boundVar);
    // group -> (values, newest time)
    std::map<Tuple, std::pair<std::vector<Value>, uint64_t>> groups;
    for (const auto& [row, t] : rowsOf(a.over.relation)) {
      Env local;
      bool ok = true;
      for (size_t i = 0; i < a.over.args.size() && ok; ++i) {
        const auto& term = a.over.args[i];
        if (term.isConstant()) {
          ok = term.constant == row[i];
        } else if (term.isVariable() && term.var != a.boundVar) {
          if (auto e = env.find(term.var); e != env.end()) {
            ok = e->second == row[i];
          } else if (auto l = local.find(term.var); l != local.end()) {
            ok = l->second == row[i];
          } else {
            local.emplace(term.var, row[i]);
          }
        }
      }
      if (!ok) continue;
      Value v;
      for (size_t i = 0; i < a.over.args.size(); ++i) {
        if (a.over.args[i].isVariable() && a.over.args[i].var == a.boundVar) v = row[i];
      }
      Tuple key;
      for (const auto& g : a.groupVars) key.push_back(env.count(g) ? env.at(g) : local.at(g));
      auto& slot = groups[key];
      slot.first.push_back(v);
      slot.second = std::max(slot.second, t);
    }
    auto reduce = [&](const std::vector<Value>& vs) -> std::optional<Value> {
      switch (a.agg) {
        case AggKind::Count: return Value::makeUint(vs.size());
        case AggKind::Sum: {
          Value total = Value::fromBits(boundType, U256(0));
          for (const auto& v : vs) {
            const auto res = checkedArith(ArithOp::Add, total, v);
            if (res.fault) {
              faulted = true;
              return std::nullopt;
            }
            total = res.value;
          }
          return total;
        }
        case AggKind::Max:
          if (vs.empty()) return std::nullopt;
          return *std::max_element(vs.begin(), vs.end(),
                                   [](const Value& x, const Value& y) { return compareValues(x, y) < 0; });
        case AggKind::Min:
          if (vs.empty()) return std::nullopt;
          return *std::min_element(vs.begin(), vs.end(),
                                   [](const Value& x, const Value& y) { return compareValues(x, y) < 0; });
      }
      return std::nullopt;
    };
    auto emit = [&](const Value& v, uint64_t t) {
      if (auto it = env.find(a.target); it != env.end()) {
        if (it->second == v) solve(r, done, env, std::max(time, t), visit);
        return;
      }
      env[a.target] = v;
      solve(r, done, env, std::max(time, t), visit);
      env.erase(a.target);
    };

    if (groupBound(a, env)) {
      Tuple key;
      for (const auto& g : a.groupVars) key.push_back(env.at(g));
      auto it = groups.find(key);
      if (it == groups.end()) {
        if (!a.guarded) return;
        if (auto v = reduce({})) emit(*v, 0);
        return;
      }
      if (auto v = reduce(it->second.first)) emit(*v, it->second.second);
      return;
    }
    for (const auto& [key, slot] : groups) {
      std::vector<std::string> added;
      for (size_t i = 0; i < a.groupVars.size(); ++i) {
        if (env.emplace(a.groupVars[i], key[i]).second) added.push_back(a.groupVars[i]);
      }
      if (auto v = reduce(slot.first)) emit(*v, slot.second);
      for (const auto& g : added) env.erase(g);
    }
  }
};

Tuple keyOf(const frontend::RelationDecl& decl, const Tuple& row) {
  Tuple key;
  for (size_t k : decl.primaryKeys) key.push_back(row[k]);
  return key;
}

void insertFact(const frontend::RelationDecl& decl, Db& db, const Tuple& row, uint64_t time) {
  auto& table = db[decl.name];
  const Tuple key = keyOf(decl, row);
  auto it = table.find(key);
  if (it == table.end() || it->second.time < time) table[key] = NaiveEvaluator::Fact{row, time};
}

Tuple instantiate(const Atom& head, const Env& env) {
  Tuple out;
  for (const auto& t : head.args) out.push_back(t.isConstant() ? t.constant : env.at(t.var));
  return out;
}

}  // namespace

NaiveEvaluator::NaiveEvaluator(const analysis::ContractModel& model) : model_(model) {}

NaiveEvaluator::Db NaiveEvaluator::evaluate() const {
  Db db = base_;
  const Reserved none;
  Solver solver{model_, db, none, faulted_};
  for (const auto& rel : model_.topoOrder) {
    for (const auto& r : model_.rules) {
      if (r.kind != analysis::RuleKind::View || r.head.relation != rel) continue;
      std::vector<std::pair<Tuple, uint64_t>> heads;
      std::vector<bool> done(r.body.size(), false);
      Env env;
      solver.solve(r, done, env, 0, [&](const Env& e, uint64_t t) { heads.emplace_back(instantiate(r.head, e), t); });
      const auto& decl = model_.relation(rel);
      for (const auto& [row, t] : heads) insertFact(decl, db, row, t);
    }
  }
  return db;
}

std::vector<std::pair<std::string, Tuple>> NaiveEvaluator::heads(const CommittedTx& tx) const {
  const Reserved reserved{{"msgSender", tx.sender}, {"msgValue", tx.value}, {"now", tx.timestamp}};
  Solver solver{model_, current_, reserved, faulted_};
  std::vector<std::pair<std::string, Tuple>> out;
  for (const auto& r : model_.rules) {
    if (r.kind != analysis::RuleKind::Transaction) continue;
    const auto& trigger = std::get<Atom>(r.body[*r.transactionLiteral]);
    if (trigger.relation != tx.relation) continue;
    Env env;
    std::vector<std::string> added;
    if (!Solver::unify(trigger.args, tx.args, env, added)) continue;
    std::vector<bool> done(r.body.size(), false);
    done[*r.transactionLiteral] = true;
    solver.solve(r, done, env, 0, [&](const Env& e, uint64_t) { out.emplace_back(r.head.relation, instantiate(r.head, e)); });
  }
  return out;
}

bool NaiveEvaluator::derives(const CommittedTx& tx) const { return !heads(tx).empty(); }

bool NaiveEvaluator::commit(const CommittedTx& tx) {
  faulted_ = false;
  const auto derived = heads(tx);
  if (derived.empty()) return false;
  ++clock_;
  for (const auto& [rel, row] : derived) {
    if (rel == "send") continue;
    insertFact(model_.relation(rel), base_, row, clock_);
  }
  current_ = evaluate();
  return true;
}

std::vector<std::pair<std::string, Tuple>> NaiveEvaluator::violations() const {
  std::vector<std::pair<std::string, Tuple>> out;
  for (const auto& v : model_.violations) {
    auto it = current_.find(v);
    if (it == current_.end()) continue;
    for (const auto& [key, fact] : it->second) out.emplace_back(v, fact.values);
  }
  return out;
}

std::map<std::string, std::set<Tuple>> NaiveEvaluator::relations() const {
  std::map<std::string, std::set<Tuple>> out;
  for (const auto& name : model_.relationOrder) {
    const auto kind = model_.relation(name).kind;
    if (kind == frontend::RelationKind::Transaction || kind == frontend::RelationKind::Reserved) continue;
    auto& set = out[name];
    if (auto it = current_.find(name); it != current_.end()) {
      for (const auto& [key, fact] : it->second) set.insert(fact.values);
    }
  }
  return out;
}

std::map<std::string, std::set<Tuple>> naiveEvaluate(const analysis::ContractModel& model,
                                                     const std::vector<CommittedTx>& committed) {
  NaiveEvaluator eval(model);
  for (const auto& tx : committed) eval.commit(tx);
  return eval.relations();
}

}  // namespace decon::runtime
