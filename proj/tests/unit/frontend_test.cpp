#include <gtest/gtest.h>

#include "decon/frontend/parser.hpp"
#include "decon/pipeline.hpp"
#include "helpers.hpp"

using namespace decon;
using namespace decon::frontend;

TEST(Parser, TransactionRule) {
  const auto p = parse(".decl recv_mint(p: address, n: int)\n.decl mint(p: address, n: int)\n"
                       ".decl *owner(p: address)\n"
                       "r1: mint(p,n):-recv_mint(p,n),msgSender(s),owner(s),n>0.");
  ASSERT_EQ(p.rules.size(), 1u);
  const auto& r = p.rules[0];
  EXPECT_EQ(r.id, "r1");
  EXPECT_EQ(r.head.relation, "mint");
  ASSERT_EQ(r.body.size(), 4u);
  EXPECT_EQ(std::get<RelationalLiteral>(r.body[0]).relation, "recv_mint");
  EXPECT_EQ(std::get<RelationalLiteral>(r.body[1]).relation, "msgSender");
  EXPECT_EQ(std::get<RelationalLiteral>(r.body[2]).relation, "owner");
  const auto& cond = std::get<ConditionLiteral>(r.body[3]);
  EXPECT_EQ(cond.op, CompareOp::Gt);
  EXPECT_EQ(cond.rhs, Term::constant("0"));
}

TEST(Parser, KeyedDeclaration) {
  const auto p = parse(".decl balanceOf(p:address, n:int)[0]");
  ASSERT_EQ(p.decls.size(), 1u);
  const auto& d = p.decls[0];
  EXPECT_EQ(d.name, "balanceOf");
  EXPECT_EQ(d.schema, (std::vector<Column>{{"p", ColumnType::Address}, {"n", ColumnType::Int}}));
  EXPECT_EQ(d.primaryKeys, std::vector<size_t>{0});
  EXPECT_EQ(d.kind, RelationKind::Simple);
}

TEST(Parser, EmptyInput) {
  const auto p = parse("");
  EXPECT_TRUE(p.decls.empty());
  EXPECT_TRUE(p.rules.empty());
  EXPECT_TRUE(p.annotations.empty());
  EXPECT_EQ(formatProgram(p), "");
}

TEST(Parser, SingleDeclFormatsAsOneLine) {
  const auto text = formatProgram(parse(".decl  a( x : int )"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(text.rfind(".decl", 0), 0u);
}

TEST(Parser, AggregationLiteral) {
  const auto p = parse(".decl t(a: address, n: int)\n.decl s(a: address, m: int)[0]\n"
                       "r: s(a,m) :- t(a,_), m = sum n: t(a,n).");
  const auto& agg = std::get<AggregationLiteral>(p.rules[0].body[1]);
  EXPECT_EQ(agg.agg, AggKind::Sum);
  EXPECT_EQ(agg.target, "m");
  EXPECT_EQ(agg.boundVar, "n");
  EXPECT_EQ(agg.over.relation, "t");
}

TEST(Parser, ErrorsCarryPosition) {
  try {
    parse(".decl a(x: int)\nr: a(x) :- a(x)");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(Parser, DuplicateRelationRejected) {
  try {
    parse(".decl a(x: int)\n.decl a(y: int)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DuplicateRelation");
  }
}

TEST(Parser, BadPrimaryKeyRejected) {
  try {
    parse(".decl a(x: int)[3]");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "MalformedPrimaryKey");
  }
}

class RoundTrip : public ::testing::TestWithParam<std::string> {};

TEST_P(RoundTrip, FormatThenParseIsIdentity) {
  const auto src = readFile(fuzz::contractPath(GetParam()));
  const auto p = parse(src);
  const auto text = formatProgram(p);
  EXPECT_EQ(parse(text), p);
  EXPECT_EQ(formatProgram(parse(text)), text);
}

INSTANTIATE_TEST_SUITE_P(Bundled, RoundTrip,
                         ::testing::Values("wallet", "wallet_buggy", "erc20", "erc20_buggy", "erc721", "erc721_buggy",
                                           "crowdsale", "simple_auction"));
