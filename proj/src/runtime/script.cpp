#include "decon/runtime/script.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace decon::runtime {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("ScriptParseError", msg); }

std::string valueText(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
  fail(where + ": unsupported value " + j.dump());
}

Value typed(const json& j, ColumnType type, const std::string& where) {
  const std::string text = valueText(j, where);
  auto v = parseValue(text, type);
  if (!v) fail(where + ": '" + text + "' is not a valid " + std::string(typeName(type)));
  return *v;
}

Tuple typedTuple(const json& arr, const std::vector<ColumnType>& types, const std::string& where) {
  if (!arr.is_array()) fail(where + ": expected an array");
  if (arr.size() != types.size()) {
    fail(where + ": expected " + std::to_string(types.size()) + " values, got " + std::to_string(arr.size()));
  }
  Tuple out;
  for (size_t i = 0; i < arr.size(); ++i) out.push_back(typed(arr[i], types[i], where));
  return out;
}

std::vector<ColumnType> columnTypes(const frontend::RelationDecl& decl, bool keys) {
  std::vector<ColumnType> out;
  for (size_t i = 0; i < decl.arity(); ++i) {
    const bool isKey = std::find(decl.primaryKeys.begin(), decl.primaryKeys.end(), i) != decl.primaryKeys.end();
    if (isKey == keys) out.push_back(decl.schema[i].type);
  }
  return out;
}

ScriptTx parseTx(const analysis::ContractModel& model, const json& j, const std::string& relation,
                 const std::string& where) {
  ScriptTx tx;
  const auto& decl = model.relation(relation);
  std::vector<ColumnType> types;
  for (const auto& c : decl.schema) types.push_back(c.type);
  tx.request.name = relation;
  tx.request.args = typedTuple(j.value("args", json::array()), types, where + " args");
  if (j.contains("sender")) tx.request.sender = typed(j["sender"], ColumnType::Address, where + " sender");
  if (j.contains("value")) tx.request.value = typed(j["value"], ColumnType::Uint, where + " value");
  if (j.contains("timestamp")) tx.request.timestamp = typed(j["timestamp"], ColumnType::Uint, where + " timestamp");
  if (j.contains("expect")) {
    const auto e = j["expect"].get<std::string>();
    if (e == "committed") tx.expect = Outcome::Committed;
    else if (e == "rejected") tx.expect = Outcome::Rejected;
    else if (e == "reverted") tx.expect = Outcome::Reverted;
    else fail(where + ": unknown expectation '" + e + "'");
  }
  for (const auto& v : j.value("views", json::array())) {
    ViewExpectation ve;
    ve.relation = v.at("relation").get<std::string>();
    auto it = model.relations.find(ve.relation);
    if (it == model.relations.end()) fail(where + ": unknown relation '" + ve.relation + "'");
    const auto& vd = it->second;
    const bool singleton = vd.kind == frontend::RelationKind::Singleton;
    ve.keys = typedTuple(v.value("keys", json::array()), singleton ? std::vector<ColumnType>{} : columnTypes(vd, true),
                         where + " " + ve.relation + " keys");
    if (v.contains("equals") && !v["equals"].is_null()) {
      std::vector<ColumnType> rt;
      if (singleton) {
        for (const auto& c : vd.schema) rt.push_back(c.type);
      } else {
        rt = columnTypes(vd, false);
      }
      ve.equals = typedTuple(v["equals"], rt, where + " " + ve.relation + " equals");
    }
    tx.views.push_back(std::move(ve));
  }
  return tx;
}

std::string tupleText(const Tuple& t) {
  std::string out = "(";
  for (size_t i = 0; i < t.size(); ++i) out += (i ? "," : "") + t[i].toString();
  return out + ")";
}

json valueJson(const Value& v) {
  if (v.type == ColumnType::Bool) return v.asBool();
  return v.toString();
}

}  // namespace

TransactionScript parseScript(const analysis::ContractModel& model, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("top level must be an object");
  TransactionScript script;
  try {
    if (doc.contains("constructor")) {
      const auto ctor = model.constructorRelation();
      if (!ctor) fail("contract declares no constructor");
      script.constructor = parseTx(model, doc["constructor"], *ctor, "constructor");
    }
    size_t i = 0;
    for (const auto& t : doc.value("txs", json::array())) {
      ++i;
      const std::string where = "tx " + std::to_string(i);
      if (!t.contains("name") || !t["name"].is_string()) fail(where + ": missing name");
      const auto rel = model.transactionRelationFor(t["name"].get<std::string>());
      if (!rel) fail(where + ": unknown transaction '" + t["name"].get<std::string>() + "'");
      script.txs.push_back(parseTx(model, t, *rel, where));
    }
  } catch (const json::exception& e) {
    fail(std::string("bad script structure: ") + e.what());
  }
  return script;
}

TransactionScript loadScript(const analysis::ContractModel& model, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseScript(model, ss.str());
}

std::vector<std::string> diffAgainst(const analysis::ContractModel& model, const ContractState& state,
                                     const std::map<std::string, std::set<Tuple>>& reference) {
  std::vector<std::string> out;
  for (const auto& rel : model.materialized) {
    std::set<Tuple> mine;
    if (auto it = state.tables.find(rel); it != state.tables.end()) {
      for (const auto& [key, row] : it->second.rows) mine.insert(row.values);
    }
    static const std::set<Tuple> empty;
    auto rit = reference.find(rel);
    const auto& theirs = rit == reference.end() ? empty : rit->second;
    for (const auto& t : mine) {
      if (!theirs.count(t)) out.push_back("+" + rel + tupleText(t));
    }
    for (const auto& t : theirs) {
      if (!mine.count(t)) out.push_back("-" + rel + tupleText(t));
    }
  }
  return out;
}

ScriptResult runScript(Runtime& runtime, const TransactionScript& script, const RunOptions& options) {
  ScriptResult result;
  const auto& model = *runtime.contract().model;
  std::optional<NaiveEvaluator> oracle;
  if (options.oracleCheck) oracle.emplace(model);

  std::vector<const ScriptTx*> all;
  if (script.constructor) all.push_back(&*script.constructor);
  for (const auto& t : script.txs) all.push_back(&t);

  for (size_t i = 0; i < all.size(); ++i) {
    const ScriptTx& tx = *all[i];
    const std::string label = "tx " + std::to_string(i + 1) + " (" + tx.request.name + ")";
    auto rc = runtime.execute(tx.request);
    if (options.checkExpectations && tx.expect && *tx.expect != rc.outcome) {
      result.failures.push_back(label + ": expected " + std::string(outcomeName(*tx.expect)) + ", got " +
                                std::string(outcomeName(rc.outcome)));
    }
    if (oracle) {
      const auto rel = *model.transactionRelationFor(tx.request.name);
      const CommittedTx ctx{rel, coerceArgs(model, rel, tx.request.args), tx.request.sender, tx.request.value,
                            tx.request.timestamp};
      if (rc.outcome == Outcome::Committed) {
        if (!oracle->commit(ctx)) result.failures.push_back(label + ": oracle derives no head for a committed transaction");
        for (const auto& d : diffAgainst(model, runtime.state(), oracle->relations())) {
          result.failures.push_back(label + ": oracle divergence " + d);
        }
      } else if (rc.outcome == Outcome::Rejected && oracle->derives(ctx)) {
        result.failures.push_back(label + ": rejected, but the oracle derives a head");
      } else if (rc.outcome == Outcome::Reverted && rc.reason == "Violation") {
        NaiveEvaluator probe = *oracle;
        probe.commit(ctx);
        if (probe.violations().empty()) result.failures.push_back(label + ": reverted, but the oracle sees no violation");
      }
    }
    if (options.checkExpectations) {
      for (const auto& v : tx.views) {
        std::optional<Tuple> got;
        try {
          got = runtime.queryView(v.relation, v.keys);
        } catch (const Error& e) {
          result.failures.push_back(label + ": view " + v.relation + ": " + e.what());
          continue;
        }
        if (got != v.equals) {
          result.failures.push_back(label + ": view " + v.relation + tupleText(v.keys) + " expected " +
                                    (v.equals ? tupleText(*v.equals) : "absent") + ", got " +
                                    (got ? tupleText(*got) : "absent"));
        }
      }
    }
    result.receipts.push_back(std::move(rc));
    result.names.push_back(tx.request.name);
  }
  return result;
}

void requireClean(const ScriptResult& result) {
  if (result.failures.empty()) return;
  std::string msg;
  for (const auto& f : result.failures) msg += (msg.empty() ? "" : "\n") + f;
  throw Error("ExpectationFailed", msg);
}

std::string receiptsJsonLines(const ScriptResult& result) {
  std::string out;
  for (size_t i = 0; i < result.receipts.size(); ++i) {
    const auto& rc = result.receipts[i];
    json line{{"index", i + 1}, {"tx", result.names[i]}, {"outcome", outcomeName(rc.outcome)}};
    if (!rc.reason.empty()) line["reason"] = rc.reason;
    json violations = json::array();
    for (const auto& v : rc.violations) violations.push_back(v.toString());
    line["violations"] = violations;
    json sends = json::array();
    for (const auto& s : rc.sends) sends.push_back(json{{"to", valueJson(s.to)}, {"amount", valueJson(s.amount)}});
    line["sends"] = sends;
    line["events"] = rc.eventsEmitted;
    out += line.dump() + "\n";
  }
  return out;
}

}  // namespace decon::runtime
