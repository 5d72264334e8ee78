#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "decon/ir/ir.hpp"

namespace decon {

/// Throws Error("IoError").
std::string readFile(const std::string& path);
void writeFile(const std::string& path, std::string_view text);

/// parse, validate, compile.
std::shared_ptr<const ir::CompiledContract> compileSource(std::string_view source);
std::shared_ptr<const ir::CompiledContract> compileFile(const std::string& path);

}  // namespace decon
