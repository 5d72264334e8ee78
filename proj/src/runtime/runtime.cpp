#include "decon/runtime/runtime.hpp"

#include <algorithm>
#include <functional>

namespace decon::runtime {

using analysis::Aggregation;
using analysis::Rule;
using analysis::TypedTerm;
using frontend::AggKind;
using frontend::CompareOp;
using frontend::RelationKind;
using ir::Statement;
using ir::UpdateFunction;
using provenance::TupleRef;

namespace {

struct OverflowFault {};
struct EagerViolation {};

struct Derivation {
  std::string relation;
  Tuple tuple;
  std::string rule;
  uint64_t firing = 0;
  std::vector<uint64_t> support;
};

struct Frame {
  std::map<std::string, Value> env;
  std::vector<uint64_t> path;
  std::string rule;
  uint64_t firing = 0;
  bool quiet = false;
};

using Emit = std::function<void(const Tuple&, const Frame&)>;

bool compare(CompareOp op, const Value& a, const Value& b) {
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

Value zeroOf(ColumnType t) { return Value::fromBits(t, U256(0)); }

Value arith(ArithOp op, const Value& a, const Value& b) {
  const auto r = checkedArith(op, a, b);
  if (r.fault) throw OverflowFault{};
  return r.value;
}

/// Group key and aggregated value of `row` for `agg`, if the row belongs
/// to some group.
std::optional<std::pair<Tuple, Value>> aggProject(const Aggregation& agg, const Tuple& row) {
  std::map<std::string, Value> seen;
  std::optional<Value> bound;
  for (size_t i = 0; i < agg.over.args.size(); ++i) {
    const auto& t = agg.over.args[i];
    if (t.isConstant()) {
      if (!(row[i] == t.constant)) return std::nullopt;
    } else if (t.isVariable()) {
      if (t.var == agg.boundVar) {
        bound = row[i];
        continue;
      }
      auto [it, inserted] = seen.emplace(t.var, row[i]);
      if (!inserted && !(it->second == row[i])) return std::nullopt;
    }
  }
  Tuple key;
  for (const auto& v : agg.groupVars) key.push_back(seen.at(v));
  return std::pair{std::move(key), *bound};
}

Value aggValue(const Aggregation& agg, const AggState& st, ColumnType boundType) {
  switch (agg.agg) {
    case AggKind::Sum: return st.total;
    case AggKind::Count: return Value::makeUint(st.rows);
    case AggKind::Max: return st.values.rbegin()->first;
    case AggKind::Min: return st.values.begin()->first;
  }
  return zeroOf(boundType);
}

}  // namespace

std::string_view outcomeName(Outcome o) {
  switch (o) {
    case Outcome::Committed: return "committed";
    case Outcome::Rejected: return "rejected";
    case Outcome::Reverted: return "reverted";
  }
  return "?";
}

Tuple coerceArgs(const analysis::ContractModel& model, const std::string& relation, const Tuple& args) {
  const auto& decl = model.relation(relation);
  if (args.size() != decl.arity()) {
    throw Error("TypeMismatch", relation + " expects " + std::to_string(decl.arity()) + " arguments, got " +
                                    std::to_string(args.size()));
  }
  Tuple out;
  for (size_t i = 0; i < args.size(); ++i) {
    const ColumnType want = decl.schema[i].type;
    if (args[i].type != want) {
      auto v = parseValue(args[i].toString(), want);
      if (!v) {
        throw Error("TypeMismatch", relation + " argument " + std::to_string(i) + " is not a valid " +
                                        std::string(typeName(want)));
      }
      out.push_back(*v);
    } else {
      out.push_back(args[i]);
    }
  }
  return out;
}

struct Runtime::Impl {
  std::shared_ptr<const ir::CompiledContract> contract;
  const analysis::ContractModel& model;
  ExecOptions options;
  ContractState state;
  provenance::Log log;
  uint64_t rowVisits = 0;
  bool transientSeen = false;
  uint64_t nextFiring = 0;

  std::map<std::string, Value> reserved;
  std::vector<Send> pendingSends;
  bool etherUnderflow = false;

  std::map<std::string, const Rule*> rulesById;
  std::map<std::string, std::vector<const Rule*>> viewRulesByHead;
  std::set<std::string> txFed;
  std::map<std::string, int> depth;
  std::map<std::string, size_t> topoIndex;
  std::map<std::string, std::vector<std::pair<std::string, size_t>>> aggBySource;
  std::map<std::string, std::vector<ir::JoinIndexRequirement>> indexesBySource;
  std::map<std::pair<std::string, std::vector<bool>>, Statement> planCache;

  Impl(std::shared_ptr<const ir::CompiledContract> c, ExecOptions o)
      : contract(std::move(c)), model(*contract->model), options(o) {
    for (const auto& r : model.rules) {
      rulesById[r.id] = &r;
      if (r.kind == analysis::RuleKind::View) {
        viewRulesByHead[r.head.relation].push_back(&r);
      } else {
        txFed.insert(r.head.relation);
      }
    }
    for (const auto& name : model.topoOrder) {
      topoIndex[name] = topoIndex.size();
      int d = 0;
      for (const auto& e : model.depGraph.edges) {
        if (e.to == name) d = std::max(d, depth[e.from] + 1);
      }
      depth[name] = d;
    }
    for (const auto& name : model.materialized) {
      Table t;
      t.keyColumns = model.relation(name).primaryKeys;
      state.tables.emplace(name, std::move(t));
    }
    for (const auto& req : contract->joinIndexRequirements) {
      JoinIndex idx;
      idx.constrained = req.constrainedKeys;
      for (size_t k : model.relation(req.relation).primaryKeys) {
        if (std::find(req.constrainedKeys.begin(), req.constrainedKeys.end(), k) == req.constrainedKeys.end()) {
          idx.unconstrained.push_back(k);
        }
      }
      state.joinIndexes.emplace(req, std::move(idx));
      indexesBySource[req.relation].push_back(req);
    }
    for (const auto& spec : contract->aggregationCaches) {
      const std::pair key{spec.ruleId, spec.literalIndex};
      state.aggCaches.emplace(key, AggCache{spec, {}});
      aggBySource[spec.aggregation.over.relation].push_back(key);
    }
    for (const auto& v : model.violations) state.violationCounts[v] = 0;
  }

  bool stored(const std::string& rel) const { return state.tables.count(rel) != 0; }

  const std::string& headOf(const UpdateFunction& f) const { return rulesById.at(f.ruleId)->head.relation; }

  Tuple keyOf(const std::string& rel, const Tuple& t) const {
    Tuple key;
    for (size_t c : model.relation(rel).primaryKeys) key.push_back(t[c]);
    return key;
  }

  uint64_t logRead(Frame& f, const std::string& rel, const Tuple& t) {
    if (!options.recordProvenance || f.quiet) return 0;
    return log.read(f.rule, TupleRef{rel, t}, f.firing);
  }

  // ---- storage -------------------------------------------------------------

  void indexRow(const std::string& rel, const Tuple& row, bool add) {
    auto it = indexesBySource.find(rel);
    if (it == indexesBySource.end()) return;
    for (const auto& req : it->second) {
      auto& idx = state.joinIndexes.at(req);
      Tuple c, u;
      for (size_t k : idx.constrained) c.push_back(row[k]);
      for (size_t k : idx.unconstrained) u.push_back(row[k]);
      if (add) {
        idx.entries[c].insert(u);
      } else {
        auto e = idx.entries.find(c);
        if (e != idx.entries.end()) {
          e->second.erase(u);
          if (e->second.empty()) idx.entries.erase(e);
        }
      }
    }
  }

  void cacheRow(const std::string& rel, const Tuple& row, bool add) {
    auto it = aggBySource.find(rel);
    if (it == aggBySource.end()) return;
    for (const auto& key : it->second) {
      auto& cache = state.aggCaches.at(key);
      const auto& agg = cache.spec.aggregation;
      auto proj = aggProject(agg, row);
      if (!proj) continue;
      auto& [group, v] = *proj;
      if (add) {
        auto [g, fresh] = cache.groups.try_emplace(group);
        AggState& st = g->second;
        if (fresh) st.total = zeroOf(v.type);
        ++st.rows;
        if (agg.agg == AggKind::Sum) st.total = arith(ArithOp::Add, st.total, v);
        if (agg.agg == AggKind::Max || agg.agg == AggKind::Min) ++st.values[v];
      } else {
        auto g = cache.groups.find(group);
        if (g == cache.groups.end()) continue;
        AggState& st = g->second;
        --st.rows;
        if (agg.agg == AggKind::Sum) st.total = arith(ArithOp::Sub, st.total, v);
        if (agg.agg == AggKind::Max || agg.agg == AggKind::Min) {
          auto m = st.values.find(v);
          if (m != st.values.end() && --m->second == 0) st.values.erase(m);
        }
        if (st.rows == 0) cache.groups.erase(g);
      }
    }
  }

  void countViolation(const std::string& rel, bool add) {
    auto it = state.violationCounts.find(rel);
    if (it == state.violationCounts.end()) return;
    it->second += add ? 1 : static_cast<size_t>(-1);
    if (it->second > 0) {
      transientSeen = true;
      if (options.eagerViolationCheck) throw EagerViolation{};
    }
  }

  void storeRow(const std::string& rel, const Tuple& t, bool pinned) {
    auto& table = state.tables.at(rel);
    table.rows[table.keyOf(t)] = Row{t, pinned};
    indexRow(rel, t, true);
    cacheRow(rel, t, true);
    countViolation(rel, true);
  }

  void removeRow(const std::string& rel, const Tuple& t) {
    auto& table = state.tables.at(rel);
    table.rows.erase(table.keyOf(t));
    indexRow(rel, t, false);
    cacheRow(rel, t, false);
    countViolation(rel, false);
  }

  // ---- evaluation ----------------------------------------------------------

  Value termValue(const TypedTerm& t, const Frame& f) const {
    if (t.isConstant()) return t.constant;
    return f.env.at(t.var);
  }

  Tuple headTuple(const analysis::Atom& head, const Frame& f) const {
    Tuple out;
    for (const auto& a : head.args) out.push_back(termValue(a, f));
    return out;
  }

  /// Calls `visit` for every row of `rel` that satisfies the column
  /// constraints; stops when `visit` returns false.
  void scan(const std::string& rel, const std::vector<std::pair<size_t, Value>>& cons,
            const std::function<bool(const Tuple&)>& visit) {
    auto matches = [&](const Tuple& row) {
      for (const auto& [c, v] : cons) {
        if (!(row[c] == v)) return false;
      }
      return true;
    };
    if (model.relation(rel).kind == RelationKind::Reserved) {
      auto it = reserved.find(rel);
      if (it == reserved.end()) return;
      ++rowVisits;
      const Tuple row{it->second};
      if (matches(row)) visit(row);
      return;
    }
    if (!stored(rel)) {
      for (const auto& row : enumerateDerived(rel, cons)) {
        ++rowVisits;
        if (matches(row) && !visit(row)) return;
      }
      return;
    }
    const auto& table = state.tables.at(rel);
    std::vector<size_t> keyed;
    for (size_t k : table.keyColumns) {
      for (const auto& [c, v] : cons) {
        if (c == k) {
          keyed.push_back(k);
          break;
        }
      }
    }
    auto valueAt = [&](size_t col) -> const Value& {
      for (const auto& [c, v] : cons) {
        if (c == col) return v;
      }
      throw Error("InternalError", "missing constraint");
    };
    if (keyed.size() == table.keyColumns.size()) {
      Tuple key;
      for (size_t k : table.keyColumns) key.push_back(valueAt(k));
      ++rowVisits;
      if (const Row* r = table.find(key); r != nullptr && matches(r->values)) visit(r->values);
      return;
    }
    if (!keyed.empty()) {
      auto idx = state.joinIndexes.find(ir::JoinIndexRequirement{rel, keyed});
      if (idx != state.joinIndexes.end()) {
        Tuple c;
        for (size_t k : keyed) c.push_back(valueAt(k));
        auto e = idx->second.entries.find(c);
        if (e == idx->second.entries.end()) return;
        // Copy: the visitor never mutates, but keep iteration independent.
        const std::vector<Tuple> rest(e->second.begin(), e->second.end());
        for (const auto& u : rest) {
          Tuple key(table.keyColumns.size());
          for (size_t i = 0; i < table.keyColumns.size(); ++i) {
            const size_t col = table.keyColumns[i];
            auto pos = std::find(idx->second.constrained.begin(), idx->second.constrained.end(), col);
            if (pos != idx->second.constrained.end()) {
              key[i] = c[static_cast<size_t>(pos - idx->second.constrained.begin())];
            } else {
              auto upos = std::find(idx->second.unconstrained.begin(), idx->second.unconstrained.end(), col);
              key[i] = u[static_cast<size_t>(upos - idx->second.unconstrained.begin())];
            }
          }
          ++rowVisits;
          const Row* r = table.find(key);
          if (r != nullptr && matches(r->values) && !visit(r->values)) return;
        }
        return;
      }
    }
    for (const auto& [key, row] : table.rows) {
      ++rowVisits;
      if (matches(row.values) && !visit(row.values)) return;
    }
  }

  void run(const Statement& s, Frame& f, const Emit& emit) {
    switch (s.kind) {
      case Statement::Kind::Search: runSearch(s, f, emit); return;
      case Statement::Kind::If:
        if (compare(s.condition.op, termValue(s.condition.lhs, f), termValue(s.condition.rhs, f))) {
          run(s.children.at(0), f, emit);
        }
        return;
      case Statement::Kind::Assign: {
        const Value v = s.function ? arith(s.function->op, termValue(s.function->lhs, f),
                                           termValue(s.function->rhs, f))
                                   : termValue(s.source, f);
        if (s.checkOnly) {
          if (f.env.at(s.target) == v) run(s.children.at(0), f, emit);
          return;
        }
        f.env[s.target] = v;
        run(s.children.at(0), f, emit);
        f.env.erase(s.target);
        return;
      }
      case Statement::Kind::AggAssign: runAgg(s, f, emit); return;
      case Statement::Kind::InsertTuple:
      case Statement::Kind::DeleteTuple: emit(headTuple(s.atom, f), f); return;
      case Statement::Kind::Sequence:
        for (const auto& c : s.children) run(c, f, emit);
        return;
    }
  }

  void runSearch(const Statement& s, Frame& f, const Emit& emit) {
    std::vector<std::pair<size_t, Value>> cons;
    for (const auto& c : s.constraints) cons.emplace_back(c.column, termValue(c.term, f));
    std::vector<Tuple> rows;
    scan(s.atom.relation, cons, [&](const Tuple& row) {
      for (const auto& [a, b] : s.sameRow) {
        if (!(row[a] == row[b])) return true;
      }
      rows.push_back(row);
      return !s.existential;
    });
    for (const auto& row : rows) {
      const uint64_t seq = logRead(f, s.atom.relation, row);
      if (seq != 0) f.path.push_back(seq);
      for (const auto& [col, var] : s.binds) f.env[var] = row[col];
      run(s.children.at(0), f, emit);
      for (const auto& [col, var] : s.binds) f.env.erase(var);
      if (seq != 0) f.path.pop_back();
    }
  }

  void runAgg(const Statement& s, Frame& f, const Emit& emit) {
    const Aggregation& agg = s.aggregation;
    const Rule& rule = *rulesById.at(f.rule);
    const AggCache& cache = state.aggCaches.at({rule.id, s.literalIndex});
    const ColumnType boundType = rule.varTypes.at(agg.boundVar);

    auto proceed = [&](const Tuple& group, const Value& v) {
      if (s.checkOnly && !(f.env.at(agg.target) == v)) return;
      size_t pushed = 0;
      if (options.recordProvenance && !f.quiet) {
        std::vector<std::pair<size_t, Value>> cons;
        for (size_t i = 0; i < agg.over.args.size(); ++i) {
          const auto& t = agg.over.args[i];
          if (t.isConstant()) cons.emplace_back(i, t.constant);
          if (t.isVariable() && t.var != agg.boundVar) {
            auto pos = std::find(agg.groupVars.begin(), agg.groupVars.end(), t.var) - agg.groupVars.begin();
            cons.emplace_back(i, group[static_cast<size_t>(pos)]);
          }
        }
        const uint64_t before = rowVisits;
        std::vector<Tuple> rows;
        scan(agg.over.relation, cons, [&](const Tuple& row) {
          if (aggProject(agg, row)) rows.push_back(row);
          return true;
        });
        rowVisits = before;
        for (const auto& row : rows) {
          f.path.push_back(logRead(f, agg.over.relation, row));
          ++pushed;
        }
      }
      if (!s.checkOnly) f.env[agg.target] = v;
      run(s.children.at(0), f, emit);
      if (!s.checkOnly) f.env.erase(agg.target);
      f.path.resize(f.path.size() - pushed);
    };

    if (!s.enumerateGroups) {
      Tuple group;
      for (const auto& v : agg.groupVars) group.push_back(f.env.at(v));
      ++rowVisits;
      auto it = cache.groups.find(group);
      if (it == cache.groups.end() || it->second.rows == 0) {
        if (!agg.guarded) return;
        if (agg.agg == AggKind::Sum) proceed(group, zeroOf(boundType));
        if (agg.agg == AggKind::Count) proceed(group, Value::makeUint(0));
        return;
      }
      proceed(group, aggValue(agg, it->second, boundType));
      return;
    }
    std::vector<std::pair<Tuple, Value>> groups;
    for (const auto& [group, st] : cache.groups) {
      ++rowVisits;
      bool ok = true;
      for (size_t i = 0; i < agg.groupVars.size() && ok; ++i) {
        auto e = f.env.find(agg.groupVars[i]);
        if (e != f.env.end() && !(e->second == group[i])) ok = false;
      }
      if (ok) groups.emplace_back(group, aggValue(agg, st, boundType));
    }
    for (const auto& [group, v] : groups) {
      std::vector<std::string> bound;
      for (size_t i = 0; i < agg.groupVars.size(); ++i) {
        if (f.env.emplace(agg.groupVars[i], group[i]).second) bound.push_back(agg.groupVars[i]);
      }
      proceed(group, v);
      for (const auto& b : bound) f.env.erase(b);
    }
  }

  const Statement& planFor(const Rule& rule, const std::vector<bool>& bound) {
    auto key = std::pair{rule.id, bound};
    auto it = planCache.find(key);
    if (it != planCache.end()) return it->second;
    std::set<size_t> cols;
    for (size_t i = 0; i < bound.size(); ++i) {
      if (bound[i]) cols.insert(i);
    }
    return planCache.emplace(key, ir::derivationPlan(model, rule, cols)).first->second;
  }

  /// Seeds head variables from column values; false on a conflict.
  static bool seedHead(const analysis::Atom& head, const std::vector<std::pair<size_t, Value>>& cons, Frame& f) {
    for (const auto& [c, v] : cons) {
      const auto& t = head.args[c];
      if (t.isConstant()) {
        if (!(t.constant == v)) return false;
      } else if (t.isVariable()) {
        auto [it, inserted] = f.env.emplace(t.var, v);
        if (!inserted && !(it->second == v)) return false;
      }
    }
    return true;
  }

  std::set<Tuple> enumerateDerived(const std::string& rel, const std::vector<std::pair<size_t, Value>>& cons) {
    std::set<Tuple> out;
    auto it = viewRulesByHead.find(rel);
    if (it == viewRulesByHead.end()) return out;
    std::vector<bool> bound(model.relation(rel).arity(), false);
    for (const auto& [c, v] : cons) bound[c] = true;
    for (const Rule* r : it->second) {
      Frame f;
      f.rule = r->id;
      f.quiet = true;
      if (!seedHead(r->head, cons, f)) continue;
      run(planFor(*r, bound), f, [&](const Tuple& t, const Frame&) { out.insert(t); });
    }
    return out;
  }

  bool derivable(const std::string& rel, const Tuple& t) {
    auto it = viewRulesByHead.find(rel);
    if (it == viewRulesByHead.end()) return false;
    std::vector<std::pair<size_t, Value>> cons;
    for (size_t i = 0; i < t.size(); ++i) cons.emplace_back(i, t[i]);
    const std::vector<bool> bound(t.size(), true);
    for (const Rule* r : it->second) {
      if (!model.needed.count(rel)) continue;
      Frame f;
      f.rule = r->id;
      f.quiet = true;
      if (!seedHead(r->head, cons, f)) continue;
      bool found = false;
      run(planFor(*r, bound), f, [&](const Tuple& h, const Frame&) { found = found || h == t; });
      if (found) return true;
    }
    return false;
  }

  std::vector<Derivation> runFunction(const UpdateFunction& fn, const std::string& rel, const Tuple& t) {
    Frame f;
    f.rule = fn.ruleId;
    f.firing = ++nextFiring;
    for (size_t i = 0; i < fn.triggerAtom.args.size(); ++i) {
      const auto& a = fn.triggerAtom.args[i];
      if (a.isConstant()) {
        if (!(a.constant == t[i])) return {};
      } else if (a.isVariable()) {
        auto [it, inserted] = f.env.emplace(a.var, t[i]);
        if (!inserted && !(it->second == t[i])) return {};
      }
    }
    if (const uint64_t seq = logRead(f, rel, t); seq != 0) f.path.push_back(seq);
    std::vector<Derivation> out;
    const std::string& head = headOf(fn);
    run(fn.body, f, [&](const Tuple& h, const Frame& fr) {
      out.push_back(Derivation{head, h, fr.rule, fr.firing, fr.path});
    });
    return out;
  }

  // ---- propagation ---------------------------------------------------------

  std::vector<std::string> dependentHeads(const std::string& rel) const {
    std::set<std::string> heads;
    for (auto kind : {ir::TriggerKind::Insert, ir::TriggerKind::Delete}) {
      for (const auto& fn : contract->functionsFor(rel, kind)) heads.insert(headOf(fn));
    }
    std::vector<std::string> out(heads.begin(), heads.end());
    std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
      const int da = depth.at(a), db = depth.at(b);
      if (da != db) return da < db;
      return options.reverseTieBreak ? topoIndex.at(a) > topoIndex.at(b) : topoIndex.at(a) < topoIndex.at(b);
    });
    return out;
  }

  std::vector<Derivation> fire(const std::string& rel, const Tuple& t, ir::TriggerKind kind, bool aggOnly,
                               const std::string* onlyHead) {
    std::vector<const UpdateFunction*> fns;
    for (const auto& fn : contract->functionsFor(rel, kind)) {
      if (aggOnly && !fn.viaAggregation) continue;
      if (onlyHead != nullptr && headOf(fn) != *onlyHead) continue;
      fns.push_back(&fn);
    }
    if (options.reverseTieBreak) std::reverse(fns.begin(), fns.end());
    std::vector<Derivation> out;
    for (const auto* fn : fns) {
      auto ds = runFunction(*fn, rel, t);
      out.insert(out.end(), std::make_move_iterator(ds.begin()), std::make_move_iterator(ds.end()));
    }
    return out;
  }

  void propagate(const std::string& rel, const Tuple& t, bool isInsert, bool pinned, const Derivation* why) {
    const std::vector<Derivation> hOld = fire(rel, t, ir::TriggerKind::Delete, isInsert, nullptr);

    if (stored(rel)) {
      if (isInsert) {
        storeRow(rel, t, pinned);
      } else {
        removeRow(rel, t);
      }
    }
    if (options.recordProvenance) {
      if (isInsert && why != nullptr) {
        log.write(why->rule, TupleRef{rel, t}, why->firing, why->support);
      } else if (!isInsert) {
        log.erase("", TupleRef{rel, t}, 0);
      }
    }

    const bool pinNew = !stored(rel) && txFed.count(rel) != 0;
    for (const auto& head : dependentHeads(rel)) {
      std::vector<Derivation> hNew = fire(rel, t, ir::TriggerKind::Insert, !isInsert, &head);
      std::vector<const Derivation*> old;
      for (const auto& d : hOld) {
        if (d.relation == head) old.push_back(&d);
      }
      reconcile(head, old, hNew, pinNew);
    }
  }

  void reconcile(const std::string& head, const std::vector<const Derivation*>& hOld,
                 const std::vector<Derivation>& hNew, bool pinned) {
    std::set<Tuple> newTuples, newKeys, oldTuples;
    for (const auto& d : hNew) {
      newTuples.insert(d.tuple);
      newKeys.insert(keyOf(head, d.tuple));
    }
    for (const auto* d : hOld) {
      if (!oldTuples.insert(d->tuple).second) continue;
      if (newTuples.count(d->tuple)) continue;
      if (newKeys.count(keyOf(head, d->tuple))) {
        if (!stored(head) && !txFed.count(head)) propagate(head, d->tuple, false, false, nullptr);
        continue;
      }
      retract(head, d->tuple);
    }
    std::set<Tuple> done;
    for (const auto& d : hNew) {
      if (!done.insert(d.tuple).second) continue;
      if (!stored(head) && oldTuples.count(d.tuple)) continue;
      assertFact(d, pinned);
    }
  }

  void retract(const std::string& rel, const Tuple& t) {
    if (rel == "send") return;
    if (stored(rel)) {
      const auto& table = state.tables.at(rel);
      const Row* row = table.find(table.keyOf(t));
      if (row == nullptr || !(row->values == t) || row->pinned) return;
    } else if (txFed.count(rel)) {
      return;
    }
    if (derivable(rel, t)) return;
    propagate(rel, t, false, false, nullptr);
  }

  void assertFact(const Derivation& d, bool pinned) {
    if (d.relation == "send") {
      enqueueSend(d);
      return;
    }
    if (stored(d.relation)) {
      auto& table = state.tables.at(d.relation);
      const Tuple key = table.keyOf(d.tuple);
      if (const Row* row = table.find(key); row != nullptr) {
        if (row->values == d.tuple) {
          if (pinned) table.rows.at(key).pinned = true;
          return;
        }
        const Tuple displaced = row->values;
        propagate(d.relation, displaced, false, false, nullptr);
      }
    }
    propagate(d.relation, d.tuple, true, pinned, &d);
  }

  void enqueueSend(const Derivation& d) {
    if (options.recordProvenance) log.write(d.rule, TupleRef{"send", d.tuple}, d.firing, d.support);
    const Value& amount = d.tuple.at(1);
    pendingSends.push_back(Send{d.tuple.at(0), amount});
    if (state.etherBalance.bits < amount.bits) {
      etherUnderflow = true;
      state.etherBalance = Value::makeUint(0);
    } else {
      state.etherBalance = Value::fromBits(ColumnType::Uint, state.etherBalance.bits - amount.bits);
    }
  }

  std::vector<TupleRef> currentViolations() const {
    std::vector<TupleRef> out;
    for (const auto& v : model.violations) {
      auto it = state.tables.find(v);
      if (it == state.tables.end()) continue;
      for (const auto& [key, row] : it->second.rows) out.push_back(TupleRef{v, row.values});
    }
    return out;
  }

  TransactionReceipt execute(const TransactionRequest& tx) {
    const auto rel = model.transactionRelationFor(tx.name);
    if (!rel) throw Error("UnknownTransaction", "no transaction relation for '" + tx.name + "'");
    const Tuple args = coerceArgs(model, *rel, tx.args);

    const ContractState snapshot = state;
    transientSeen = false;
    pendingSends.clear();
    etherUnderflow = false;
    reserved = {{"msgSender", tx.sender}, {"msgValue", tx.value}, {"now", tx.timestamp}};

    TransactionReceipt rc;
    try {
      state.etherBalance = arith(ArithOp::Add, state.etherBalance, tx.value);
      std::vector<Derivation> heads = fire(*rel, args, ir::TriggerKind::Insert, false, nullptr);
      std::set<std::pair<std::string, Tuple>> seen;
      std::vector<Derivation> unique;
      for (auto& h : heads) {
        if (seen.emplace(h.relation, h.tuple).second) unique.push_back(std::move(h));
      }
      if (unique.empty()) {
        rc.outcome = Outcome::Rejected;
      } else {
        for (const auto& h : unique) assertFact(h, true);
        rc.violations = currentViolations();
        if (!rc.violations.empty()) {
          rc.outcome = Outcome::Reverted;
          rc.reason = "Violation";
        } else if (etherUnderflow) {
          rc.outcome = Outcome::Reverted;
          rc.reason = "InsufficientContractBalance";
        }
      }
    } catch (const OverflowFault&) {
      rc.outcome = Outcome::Reverted;
      rc.reason = "Overflow";
    } catch (const EagerViolation&) {
      rc.outcome = Outcome::Reverted;
      rc.reason = "Violation";
      rc.violations = currentViolations();
    }
    reserved.clear();

    if (rc.outcome != Outcome::Committed) {
      state = snapshot;
      return rc;
    }
    rc.sends = pendingSends;
    EventRecord ev{*rel, args, tx.sender, tx.value, tx.timestamp, {}};
    for (const auto& s : pendingSends) ev.sends.emplace_back(s.to, s.amount);
    state.eventLog.push_back(std::move(ev));
    rc.eventsEmitted.push_back(model.relation(*rel).interfaceName() + tupleToString(args));
    return rc;
  }
};

Runtime::Runtime(std::shared_ptr<const ir::CompiledContract> contract, ExecOptions options)
    : impl_(std::make_unique<Impl>(std::move(contract), options)) {}
Runtime::~Runtime() = default;
Runtime::Runtime(Runtime&&) noexcept = default;
Runtime& Runtime::operator=(Runtime&&) noexcept = default;

TransactionReceipt Runtime::instantiate(const Tuple& args, const Value& deployer, const Value& timestamp,
                                        const Value& value) {
  const auto ctor = impl_->model.constructorRelation();
  if (!ctor) {
    if (!args.empty()) throw Error("TypeMismatch", "contract declares no constructor");
    return TransactionReceipt{};
  }
  auto rc = execute(TransactionRequest{*ctor, args, deployer, value, timestamp});
  if (rc.outcome != Outcome::Committed) {
    throw Error("ConstructorReverted", "constructor " + std::string(outcomeName(rc.outcome)) +
                                           (rc.reason.empty() ? "" : " (" + rc.reason + ")"));
  }
  return rc;
}

TransactionReceipt Runtime::execute(const TransactionRequest& tx) { return impl_->execute(tx); }

std::optional<Tuple> Runtime::queryView(const std::string& relation, const Tuple& keys) const {
  const auto& model = impl_->model;
  if (!model.publicViews.count(relation)) throw Error("NotPublic", "'" + relation + "' is not a public view");
  const auto& decl = model.relation(relation);
  const auto& table = impl_->state.tables.at(relation);
  const Row* row = nullptr;
  if (decl.kind == RelationKind::Singleton) {
    row = table.rows.empty() ? nullptr : &table.rows.begin()->second;
  } else {
    if (keys.size() != decl.primaryKeys.size()) {
      throw Error("KeyArityMismatch", relation + " takes " + std::to_string(decl.primaryKeys.size()) + " keys");
    }
    Tuple key;
    for (size_t i = 0; i < keys.size(); ++i) {
      key.push_back(Value::fromBits(decl.schema[decl.primaryKeys[i]].type, keys[i].bits));
    }
    row = table.find(key);
  }
  if (row == nullptr) return std::nullopt;
  Tuple out;
  for (size_t c = 0; c < decl.arity(); ++c) {
    if (decl.kind == RelationKind::Singleton || !decl.isKey(c)) out.push_back(row->values[c]);
  }
  return out;
}

const ContractState& Runtime::state() const { return impl_->state; }
const ir::CompiledContract& Runtime::contract() const { return *impl_->contract; }
const provenance::Log& Runtime::provenanceLog() const { return impl_->log; }
uint64_t Runtime::rowVisits() const { return impl_->rowVisits; }
void Runtime::resetRowVisits() { impl_->rowVisits = 0; }
bool Runtime::transientViolationSeen() const { return impl_->transientSeen; }

}  // namespace decon::runtime
