#pragma once

#include <memory>
#include <string>

#include "decon/pipeline.hpp"
#include "fuzz.hpp"

namespace testutil {

inline std::shared_ptr<const decon::ir::CompiledContract> bundled(const std::string& name) {
  return decon::compileFile(decon::fuzz::contractPath(name));
}

inline decon::Value addr(uint64_t v) { return decon::Value::makeAddress(v); }
inline decon::Value num(int64_t v) { return decon::Value::makeInt(v); }
inline decon::Value unum(uint64_t v) { return decon::Value::makeUint(v); }

}  // namespace testutil
