#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "decon/error.hpp"
#include "decon/frontend/ast.hpp"

namespace decon::frontend {

/// Lexing or parsing failure. Carries the position and the set of token
/// kinds that would have been accepted there.
class ParseError : public Error {
 public:
  ParseError(std::string code, int line, int column, std::vector<std::string> expected,
             const std::string& message);

  int line() const { return line_; }
  int column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::vector<std::string> expected_;
};

SourceProgram parse(std::string_view source);

/// Canonical pretty-printed form; parse(formatProgram(p)) == p.
std::string formatProgram(const SourceProgram& program);

}  // namespace decon::frontend
