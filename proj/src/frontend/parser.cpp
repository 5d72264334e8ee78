#include "decon/frontend/parser.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace decon::frontend {

ParseError::ParseError(std::string code, int line, int column, std::vector<std::string> expected,
                       const std::string& message)
    : Error(std::move(code), std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

namespace {

enum class Tok {
  Ident,
  Number,
  Directive,  // .decl .public .violation
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Dot,
  Colon,
  ColonDash,   // :-
  ColonEq,     // :=
  Assign,      // =
  EqEq,
  NotEq,
  Lt,
  Gt,
  Le,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
  Underscore,
  End,
};

std::string tokName(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::Directive: return "directive";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Colon: return "':'";
    case Tok::ColonDash: return "':-'";
    case Tok::ColonEq: return "':='";
    case Tok::Assign: return "'='";
    case Tok::EqEq: return "'=='";
    case Tok::NotEq: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Gt: return "'>'";
    case Tok::Le: return "'<='";
    case Tok::Ge: return "'>='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Underscore: return "'_'";
    case Tok::End: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skipTrivia();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.text = std::string(src_.substr(start, pos_ - start));
        t.kind = t.text == "_" ? Tok::Underscore : Tok::Ident;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        const size_t start = pos_;
        if (c == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
          advance();
          advance();
          if (pos_ >= src_.size() || !std::isxdigit(static_cast<unsigned char>(src_[pos_]))) {
            throw ParseError("ParseError", t.line, t.column, {"hex digit"}, "malformed hex literal");
          }
          while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        } else {
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() &&
            (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          throw ParseError("ParseError", line_, col_, {"number"}, "malformed number literal");
        }
        t.kind = Tok::Number;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (c == '.' && pos_ + 1 < src_.size() &&
                 std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
        const size_t start = pos_;
        advance();
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) advance();
        t.text = std::string(src_.substr(start, pos_ - start));
        if (t.text != ".decl" && t.text != ".public" && t.text != ".violation") {
          throw ParseError("ParseError", t.line, t.column, {".decl", ".public", ".violation"},
                           "unknown directive '" + t.text + "'");
        }
        t.kind = Tok::Directive;
      } else {
        t.kind = punct();
        if (t.kind == Tok::End) {
          throw ParseError("ParseError", t.line, t.column, {"token"},
                           std::string("unexpected character '") + c + "'");
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool startsWith(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void skipTrivia() {
    for (;;) {
      if (pos_ >= src_.size()) return;
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (startsWith("//")) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (startsWith("/*")) {
        const int line = line_;
        const int col = col_;
        advance();
        advance();
        while (pos_ < src_.size() && !startsWith("*/")) advance();
        if (pos_ >= src_.size()) {
          throw ParseError("ParseError", line, col, {"'*/'"}, "unterminated block comment");
        }
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  Tok punct() {
    struct Entry {
      std::string_view spelling;
      Tok kind;
    };
    static constexpr Entry kTable[] = {
        {":-", Tok::ColonDash}, {":=", Tok::ColonEq}, {"==", Tok::EqEq}, {"!=", Tok::NotEq},
        {"<=", Tok::Le},        {">=", Tok::Ge},      {"(", Tok::LParen}, {")", Tok::RParen},
        {"[", Tok::LBracket},   {"]", Tok::RBracket}, {",", Tok::Comma},  {".", Tok::Dot},
        {":", Tok::Colon},      {"=", Tok::Assign},   {"<", Tok::Lt},     {">", Tok::Gt},
        {"+", Tok::Plus},       {"-", Tok::Minus},    {"*", Tok::Star},   {"/", Tok::Slash},
    };
    for (const auto& e : kTable) {
      if (startsWith(e.spelling)) {
        for (size_t i = 0; i < e.spelling.size(); ++i) advance();
        return e.kind;
      }
    }
    return Tok::End;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  SourceProgram run() {
    SourceProgram prog;
    std::set<std::string> relationNames;
    std::set<std::string> ruleIds;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Directive) {
        const Token dir = next();
        if (dir.text == ".decl") {
          RelationDecl d = parseDecl();
          if (!relationNames.insert(d.name).second) {
            throw ParseError("DuplicateRelation", d.loc.line, d.loc.column, {},
                             "relation '" + d.name + "' declared twice");
          }
          prog.decls.push_back(std::move(d));
        } else {
          const auto kind =
              dir.text == ".public" ? AnnotationKind::Public : AnnotationKind::Violation;
          do {
            const Token name = expect(Tok::Ident);
            prog.annotations.push_back(Annotation{kind, name.text, {name.line, name.column}});
          } while (accept(Tok::Comma));
        }
      } else {
        RuleDecl r = parseRule(prog.rules.size() + 1);
        if (!ruleIds.insert(r.id).second) {
          throw ParseError("DuplicateRuleId", r.loc.line, r.loc.column, {},
                           "rule id '" + r.id + "' used twice");
        }
        prog.rules.push_back(std::move(r));
      }
    }
    return prog;
  }

 private:
  const Token& peek(size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(std::vector<Tok> expected) const {
    const Token& t = peek();
    std::vector<std::string> names;
    std::string joined;
    for (Tok k : expected) {
      names.push_back(tokName(k));
      if (!joined.empty()) joined += ", ";
      joined += tokName(k);
    }
    const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw ParseError("ParseError", t.line, t.column, names,
                     "expected one of {" + joined + "}, found " +
                         (t.text.empty() ? tokName(t.kind) : found));
  }

  Token expect(Tok k) {
    if (peek().kind != k) fail({k});
    return next();
  }

  RelationDecl parseDecl() {
    RelationDecl d;
    const bool singleton = accept(Tok::Star);
    const Token name = expect(Tok::Ident);
    d.name = name.text;
    d.loc = {name.line, name.column};
    if (isReservedName(d.name) && !isConstructorName(d.name)) {
      throw ParseError("ReservedRelationRedeclared", name.line, name.column, {},
                       "'" + d.name + "' is a reserved relation");
    }
    expect(Tok::LParen);
    if (peek().kind != Tok::RParen) {
      do {
        const Token col = expect(Tok::Ident);
        expect(Tok::Colon);
        const Token type = expect(Tok::Ident);
        const auto ct = parseTypeName(type.text);
        if (!ct) {
          throw ParseError("ParseError", type.line, type.column, {"int", "uint", "bool", "address"},
                           "unknown column type '" + type.text + "'");
        }
        d.schema.push_back(Column{col.text, *ct});
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen);

    if (singleton) {
      d.kind = RelationKind::Singleton;
    } else if (hasTransactionPrefix(d.name) || isConstructorName(d.name)) {
      d.kind = RelationKind::Transaction;
    }

    if (peek().kind == Tok::LBracket) {
      const Token br = next();
      if (d.kind != RelationKind::Simple) {
        throw ParseError("MalformedPrimaryKey", br.line, br.column, {},
                         "only simple relations take a primary-key bracket");
      }
      do {
        const Token n = expect(Tok::Number);
        const auto idx = parseValue(n.text, ColumnType::Uint);
        if (!idx || idx->bits >= U256(d.schema.size())) {
          throw ParseError("MalformedPrimaryKey", n.line, n.column, {},
                           "primary key index " + n.text + " out of range");
        }
        const size_t k = idx->bits.limb(0);
        if (!d.primaryKeys.empty() && k <= d.primaryKeys.back()) {
          throw ParseError("MalformedPrimaryKey", n.line, n.column, {},
                           "primary key indices must be strictly increasing");
        }
        d.primaryKeys.push_back(k);
      } while (accept(Tok::Comma));
      expect(Tok::RBracket);
    } else if (d.kind == RelationKind::Simple) {
      for (size_t i = 0; i < d.schema.size(); ++i) d.primaryKeys.push_back(i);
    }
    return d;
  }

  Term parseTerm() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Underscore:
        next();
        return Term::wildcard();
      case Tok::Number:
        return Term::constant(next().text);
      case Tok::Minus: {
        next();
        const Token n = expect(Tok::Number);
        return Term::constant("-" + n.text);
      }
      case Tok::Ident: {
        Token id = next();
        if (id.text == "true" || id.text == "false") return Term::constant(id.text);
        return Term::variable(id.text);
      }
      default:
        fail({Tok::Ident, Tok::Number, Tok::Underscore, Tok::Minus});
    }
  }

  RelationalLiteral parseRelational() {
    const Token name = expect(Tok::Ident);
    RelationalLiteral lit;
    lit.relation = name.text;
    lit.loc = {name.line, name.column};
    expect(Tok::LParen);
    if (peek().kind != Tok::RParen) {
      do {
        lit.args.push_back(parseTerm());
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen);
    return lit;
  }

  static std::optional<AggKind> aggKind(const std::string& s) {
    if (s == "sum") return AggKind::Sum;
    if (s == "max") return AggKind::Max;
    if (s == "min") return AggKind::Min;
    if (s == "count") return AggKind::Count;
    return std::nullopt;
  }

  std::optional<ArithOp> arithOp() {
    switch (peek().kind) {
      case Tok::Plus: next(); return ArithOp::Add;
      case Tok::Minus: next(); return ArithOp::Sub;
      case Tok::Star: next(); return ArithOp::Mul;
      case Tok::Slash: next(); return ArithOp::Div;
      default: return std::nullopt;
    }
  }

  std::optional<CompareOp> compareOp() {
    switch (peek().kind) {
      case Tok::Gt: next(); return CompareOp::Gt;
      case Tok::Lt: next(); return CompareOp::Lt;
      case Tok::Ge: next(); return CompareOp::Ge;
      case Tok::Le: next(); return CompareOp::Le;
      case Tok::EqEq: next(); return CompareOp::Eq;
      case Tok::NotEq: next(); return CompareOp::Ne;
      default: return std::nullopt;
    }
  }

  Literal parseBodyLiteral() {
    const Token& first = peek();
    const SourceLoc loc{first.line, first.column};
    if (first.kind == Tok::Ident && peek(1).kind == Tok::LParen) return parseRelational();

    if (first.kind == Tok::Ident && (peek(1).kind == Tok::ColonEq || peek(1).kind == Tok::Assign)) {
      const std::string target = next().text;
      const bool walrus = next().kind == Tok::ColonEq;
      // Aggregation: `y = agg x: R(...)`.
      if (!walrus && peek().kind == Tok::Ident && peek(1).kind == Tok::Ident &&
          peek(2).kind == Tok::Colon) {
        if (const auto agg = aggKind(peek().text)) {
          next();
          AggregationLiteral a;
          a.target = target;
          a.agg = *agg;
          a.boundVar = next().text;
          expect(Tok::Colon);
          a.over = parseRelational();
          a.loc = loc;
          return a;
        }
      }
      FunctionLiteral f;
      f.target = target;
      f.loc = loc;
      f.lhs = parseTerm();
      const auto op = arithOp();
      if (!op) fail({Tok::Plus, Tok::Minus, Tok::Star, Tok::Slash});
      f.op = *op;
      f.rhs = parseTerm();
      return f;
    }

    ConditionLiteral c;
    c.loc = loc;
    c.lhs = parseTerm();
    const auto op = compareOp();
    if (!op) fail({Tok::Gt, Tok::Lt, Tok::Ge, Tok::Le, Tok::EqEq, Tok::NotEq, Tok::ColonEq});
    c.op = *op;
    c.rhs = parseTerm();
    return c;
  }

  RuleDecl parseRule(size_t ordinal) {
    RuleDecl r;
    const Token& first = peek();
    r.loc = {first.line, first.column};
    if (first.kind == Tok::Ident && peek(1).kind == Tok::Colon) {
      r.id = next().text;
      next();
    } else if (first.kind == Tok::Ident) {
      r.id = "rule_" + std::to_string(ordinal);
      r.explicitId = false;
    } else {
      fail({Tok::Ident, Tok::Directive});
    }
    r.head = parseRelational();
    expect(Tok::ColonDash);
    do {
      r.body.push_back(parseBodyLiteral());
    } while (accept(Tok::Comma));
    expect(Tok::Dot);
    return r;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

}  // namespace

SourceProgram parse(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.run();
}

std::string formatProgram(const SourceProgram& program) {
  std::ostringstream out;
  for (const auto& d : program.decls) {
    out << ".decl " << (d.kind == RelationKind::Singleton ? "*" : "") << d.name << "(";
    for (size_t i = 0; i < d.schema.size(); ++i) {
      if (i != 0) out << ", ";
      out << d.schema[i].name << ": " << typeName(d.schema[i].type);
    }
    out << ")";
    if (d.kind == RelationKind::Simple && d.primaryKeys.size() != d.schema.size()) {
      out << "[";
      for (size_t i = 0; i < d.primaryKeys.size(); ++i) {
        if (i != 0) out << ",";
        out << d.primaryKeys[i];
      }
      out << "]";
    }
    out << "\n";
  }
  for (const auto& a : program.annotations) {
    out << (a.kind == AnnotationKind::Public ? ".public " : ".violation ") << a.relationName << "\n";
  }
  for (const auto& r : program.rules) {
    if (r.explicitId) out << r.id << ": ";
    out << formatRelational(r.head) << " :- ";
    for (size_t i = 0; i < r.body.size(); ++i) {
      if (i != 0) out << ", ";
      out << formatLiteral(r.body[i]);
    }
    out << ".\n";
  }
  return out.str();
}

}  // namespace decon::frontend
