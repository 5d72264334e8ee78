#include "decon/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "decon/frontend/parser.hpp"

namespace decon {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << text;
}

std::shared_ptr<const ir::CompiledContract> compileSource(std::string_view source) {
  const auto model = analysis::validate(frontend::parse(source));
  return std::make_shared<const ir::CompiledContract>(ir::compile(model));
}

std::shared_ptr<const ir::CompiledContract> compileFile(const std::string& path) { return compileSource(readFile(path)); }

}  // namespace decon
