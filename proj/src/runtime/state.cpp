#include "decon/runtime/state.hpp"

namespace decon::runtime {

Tuple Table::keyOf(const Tuple& row) const {
  Tuple key;
  key.reserve(keyColumns.size());
  for (size_t c : keyColumns) key.push_back(row.at(c));
  return key;
}

const Row* Table::find(const Tuple& key) const {
  auto it = rows.find(key);
  return it == rows.end() ? nullptr : &it->second;
}

std::map<std::string, std::set<Tuple>> ContractState::contents() const {
  std::map<std::string, std::set<Tuple>> out;
  for (const auto& [name, table] : tables) {
    auto& set = out[name];
    for (const auto& [key, row] : table.rows) set.insert(row.values);
  }
  return out;
}

}  // namespace decon::runtime
