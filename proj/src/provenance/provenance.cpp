#include "decon/provenance/provenance.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <sstream>

namespace decon::provenance {

using nlohmann::json;

namespace {

json valueJson(const Value& v) {
  if (v.type == ColumnType::Bool) return v.asBool();
  return v.toString();
}

json tupleJson(const TupleRef& t) {
  json values = json::array();
  for (const auto& v : t.values) values.push_back(valueJson(v));
  return json{{"relation", t.relation}, {"values", values}};
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool isLeafRelation(const analysis::ContractModel& model, const std::string& rel) {
  auto it = model.relations.find(rel);
  if (it == model.relations.end()) return true;
  return it->second.kind == frontend::RelationKind::Transaction ||
         it->second.kind == frontend::RelationKind::Reserved;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string_view eventKindName(ProvEvent::Kind k) {
  switch (k) {
    case ProvEvent::Kind::Read: return "read";
    case ProvEvent::Kind::Write: return "write";
    case ProvEvent::Kind::Delete: return "delete";
  }
  return "?";
}

uint64_t Log::read(const std::string& rule, TupleRef tuple, uint64_t firing) {
  const uint64_t seq = events_.size() + 1;
  events_.push_back(ProvEvent{ProvEvent::Kind::Read, rule, std::move(tuple), seq, firing, {}});
  return seq;
}

uint64_t Log::write(const std::string& rule, TupleRef tuple, uint64_t firing, std::vector<uint64_t> support) {
  const uint64_t seq = events_.size() + 1;
  events_.push_back(ProvEvent{ProvEvent::Kind::Write, rule, std::move(tuple), seq, firing, std::move(support)});
  return seq;
}

uint64_t Log::erase(const std::string& rule, TupleRef tuple, uint64_t firing) {
  const uint64_t seq = events_.size() + 1;
  events_.push_back(ProvEvent{ProvEvent::Kind::Delete, rule, std::move(tuple), seq, firing, {}});
  return seq;
}

ProvTree explain(const analysis::ContractModel& model, const Log& log, const TupleRef& tuple) {
  std::map<TupleRef, std::vector<uint64_t>> writes;
  bool everRead = false;
  for (const auto& e : log.events()) {
    if (e.kind == ProvEvent::Kind::Write) writes[e.tuple].push_back(e.seq);
    if (e.kind == ProvEvent::Kind::Read && e.tuple == tuple) everRead = true;
  }
  auto latestBefore = [&](const TupleRef& t, uint64_t bound) -> uint64_t {
    auto it = writes.find(t);
    if (it == writes.end()) return 0;
    uint64_t best = 0;
    for (uint64_t s : it->second) {
      if (s < bound) best = s;
    }
    return best;
  };

  std::function<ProvTree(const TupleRef&, uint64_t)> build = [&](const TupleRef& t, uint64_t writeSeq) {
    ProvTree node;
    node.tuple = t;
    if (writeSeq == 0) return node;
    const ProvEvent& w = log.at(writeSeq);
    node.rule = w.rule;
    node.writeSeq = writeSeq;
    std::vector<TupleRef> seen;
    for (uint64_t readSeq : w.support) {
      const ProvEvent& r = log.at(readSeq);
      if (std::find(seen.begin(), seen.end(), r.tuple) != seen.end()) continue;
      seen.push_back(r.tuple);
      const uint64_t child = isLeafRelation(model, r.tuple.relation) ? 0 : latestBefore(r.tuple, readSeq);
      node.children.push_back(build(r.tuple, child));
    }
    return node;
  };

  const uint64_t root = latestBefore(tuple, UINT64_MAX);
  if (root == 0) {
    if (isLeafRelation(model, tuple.relation) && everRead) return ProvTree{tuple, "", 0, {}};
    throw Error("TupleNeverDerived", tuple.toString() + " was never derived");
  }
  return build(tuple, root);
}

std::string renderDot(const ProvTree& tree) {
  std::ostringstream out;
  out << "digraph provenance {\n  rankdir=BT;\n";
  size_t tuples = 0, rules = 0;
  std::function<std::string(const ProvTree&)> emit = [&](const ProvTree& n) {
    const std::string id = "t" + std::to_string(tuples++);
    out << "  " << id << " [shape=box, label=\"" << escape(n.tuple.toString()) << "\"];\n";
    if (n.isLeaf()) return id;
    const std::string rid = "r" + std::to_string(rules++);
    out << "  " << rid << " [shape=ellipse, label=\"" << escape(n.rule) << "\"];\n";
    out << "  " << rid << " -> " << id << ";\n";
    for (const auto& c : n.children) {
      const std::string cid = emit(c);
      out << "  " << cid << " -> " << rid << ";\n";
    }
    return id;
  };
  emit(tree);
  out << "}\n";
  return out.str();
}

std::string renderText(const ProvTree& tree) {
  std::ostringstream out;
  std::function<void(const ProvTree&, int)> emit = [&](const ProvTree& n, int depth) {
    out << std::string(static_cast<size_t>(depth) * 2, ' ') << n.tuple.toString();
    if (!n.isLeaf()) out << " <- " << n.rule;
    out << "\n";
    for (const auto& c : n.children) emit(c, depth + 1);
  };
  emit(tree, 0);
  return out.str();
}

std::string renderJson(const ProvTree& tree) {
  std::function<json(const ProvTree&)> build = [&](const ProvTree& n) {
    json node{{"tuple", tupleJson(n.tuple)}};
    if (!n.isLeaf()) {
      node["rule"] = n.rule;
      node["seq"] = n.writeSeq;
    }
    json children = json::array();
    for (const auto& c : n.children) children.push_back(build(c));
    node["children"] = children;
    return node;
  };
  return build(tree).dump(2) + "\n";
}

std::string toJsonLines(const Log& log) {
  std::string out;
  for (const auto& e : log.events()) {
    json line{{"kind", eventKindName(e.kind)}, {"rule", e.rule}, {"tuple", tupleJson(e.tuple)},
              {"seq", e.seq}, {"firing", e.firing}};
    if (e.kind == ProvEvent::Kind::Write) line["support"] = e.support;
    out += line.dump() + "\n";
  }
  return out;
}

TupleRef parseTupleSpec(const analysis::ContractModel& model, std::string_view spec) {
  const auto open = spec.find('(');
  const auto close = spec.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error("BadTupleSpec", "expected relation(v1,...), got '" + std::string(spec) + "'");
  }
  TupleRef out;
  out.relation = trim(spec.substr(0, open));
  auto it = model.relations.find(out.relation);
  if (it == model.relations.end()) throw Error("UnknownRelation", "relation '" + out.relation + "' is not declared");
  const auto& decl = it->second;
  const std::string inner = trim(spec.substr(open + 1, close - open - 1));
  std::vector<std::string> parts;
  if (!inner.empty()) {
    std::stringstream ss(inner);
    std::string part;
    while (std::getline(ss, part, ',')) parts.push_back(trim(part));
  }
  if (parts.size() != decl.arity()) {
    throw Error("BadTupleSpec", out.relation + " has arity " + std::to_string(decl.arity()));
  }
  for (size_t i = 0; i < parts.size(); ++i) {
    auto v = parseValue(parts[i], decl.schema[i].type);
    if (!v) {
      throw Error("BadTupleSpec", "'" + parts[i] + "' is not a valid " + std::string(typeName(decl.schema[i].type)));
    }
    out.values.push_back(*v);
  }
  return out;
}

}  // namespace decon::provenance
