#include <gtest/gtest.h>

#include <algorithm>

#include "decon/analysis/model.hpp"
#include "decon/frontend/parser.hpp"
#include "decon/pipeline.hpp"
#include "helpers.hpp"

using namespace decon;
using namespace decon::analysis;

namespace {

ContractModel model(const std::string& src) { return validate(frontend::parse(src)); }

ContractModel walletModel() { return *testutil::bundled("wallet")->model; }

std::vector<std::string> codes(const std::string& src) {
  try {
    model(src);
  } catch (const AnalysisError& e) {
    std::vector<std::string> out;
    for (const auto& d : e.diagnostics()) out.push_back(d.code);
    return out;
  }
  return {};
}

bool hasEdge(const ContractModel& m, const std::string& from, const std::string& to, const std::string& rule) {
  const auto& e = m.depGraph.edges;
  return std::find(e.begin(), e.end(), DependencyEdge{from, to, rule}) != e.end();
}

}  // namespace

TEST(Analysis, WalletTransactionRules) {
  const auto m = walletModel();
  std::vector<std::string> tx;
  for (const auto& r : m.rules) {
    if (r.kind == RuleKind::Transaction && r.id != "r0") tx.push_back(r.id);
  }
  EXPECT_EQ(tx, (std::vector<std::string>{"r1", "r2", "r3"}));
}

TEST(Analysis, WalletDependencyChain) {
  const auto m = walletModel();
  EXPECT_TRUE(hasEdge(m, "recv_mint", "mint", "r1"));
  EXPECT_TRUE(hasEdge(m, "mint", "transfer", "r6"));
  EXPECT_TRUE(hasEdge(m, "transfer", "totalIn", "r9"));
  EXPECT_TRUE(hasEdge(m, "totalIn", "balanceOf", "r5"));
}

TEST(Analysis, TopologicalOrderRespectsEdges) {
  const auto m = walletModel();
  for (const auto& e : m.depGraph.edges) {
    if (e.from == e.to) continue;
    EXPECT_LT(m.topoRank(e.from), m.topoRank(e.to)) << e.from << " -> " << e.to;
  }
  EXPECT_EQ(walletModel().topoOrder, m.topoOrder);
}

TEST(Analysis, RecursionDetected) {
  try {
    model(".decl a(x: int)\n.decl b(x: int)\nr1: a(x) :- b(x).\nr2: b(x) :- a(x).");
    FAIL();
  } catch (const AnalysisError& e) {
    ASSERT_FALSE(e.diagnostics().empty());
    EXPECT_EQ(e.diagnostics()[0].code, "RecursionDetected");
    EXPECT_NE(e.diagnostics()[0].message.find("a"), std::string::npos);
  }
}

TEST(Analysis, UngroundedHeadVariable) {
  const auto c = codes(".decl h(x: int, y: int)\n.decl b(x: int)\nr: h(x,y) :- b(x).");
  EXPECT_EQ(c, std::vector<std::string>{"UngroundedHeadVariable"});
}

TEST(Analysis, ArityMismatch) {
  const auto c = codes(".decl h(x: int)\n.decl b(x: int)\nr: h(x) :- b(x,x).");
  EXPECT_NE(std::find(c.begin(), c.end(), "ArityMismatch"), c.end());
}

TEST(Analysis, MixedIntUintArithmeticRejected) {
  const auto c = codes(".decl h(x: int)\n.decl a(x: int)\n.decl b(x: uint)\nr: h(z) :- a(x), b(y), z := x+y.");
  EXPECT_NE(std::find(c.begin(), c.end(), "TypeMismatch"), c.end());
}

TEST(Analysis, ReservedOutsideTransactionRule) {
  const auto c = codes(".decl h(x: address)\nr: h(s) :- msgSender(s).");
  EXPECT_NE(std::find(c.begin(), c.end(), "ReservedOutsideTransactionRule"), c.end());
}

TEST(Analysis, TwoTransactionLiteralsRejected) {
  const auto c = codes(".decl recv_a(x: int)\n.decl recv_b(x: int)\n.decl h(x: int)\nr: h(x) :- recv_a(x), recv_b(x).");
  EXPECT_NE(std::find(c.begin(), c.end(), "MultipleTransactionTriggers"), c.end());
}

TEST(Analysis, DiagnosticFormat) {
  Diagnostic d{"error", "r3", "TypeMismatch", "bad"};
  EXPECT_EQ(d.format(), "error:r3:TypeMismatch:bad");
}

TEST(Materialization, WalletFixpoint) {
  const auto m = walletModel();
  const std::set<std::string> expected{"totalSupply", "balanceOf", "owner", "transfer", "totalOut", "totalIn",
                                       "allMint", "allBurn", "totalBalance", "unequalTotalSupply", "negativeBalance"};
  EXPECT_EQ(materializationSet(m), expected);
  EXPECT_FALSE(m.isStored("mint"));
  EXPECT_FALSE(m.isStored("burn"));
}

TEST(Materialization, NoAnnotationsNothingStored) {
  const auto m = model(".decl a(x: int)\n.decl b(x: int)\nr: a(x) :- b(x).");
  EXPECT_TRUE(materializationSet(m).empty());
}

TEST(Materialization, ViolationBodyIsStored) {
  const auto m = model(".decl b(p: address, n: int)[0]\n.decl *lim(n: int)\n.decl v(p: address)\n.violation v\n"
                       "r: v(p) :- b(p,n), lim(m), n < m.");
  EXPECT_TRUE(materializationSet(m).count("b"));
  EXPECT_TRUE(materializationSet(m).count("lim"));
}

TEST(Interface, WalletSignatures) {
  const auto m = walletModel();
  const auto sigs = publicInterface(m);
  auto find = [&](const std::string& name) {
    return *std::find_if(sigs.begin(), sigs.end(), [&](const auto& s) { return s.name == name; });
  };
  const auto mint = find("mint");
  EXPECT_EQ(mint.kind, FunctionSignature::Kind::Transaction);
  EXPECT_EQ(mint.params, (std::vector<frontend::Column>{{"p", ColumnType::Address}, {"amount", ColumnType::Int}}));
  ASSERT_EQ(mint.results.size(), 1u);
  EXPECT_EQ(mint.results[0].type, ColumnType::Bool);

  const auto supply = find("totalSupply");
  EXPECT_TRUE(supply.params.empty());
  ASSERT_EQ(supply.results.size(), 1u);
  EXPECT_EQ(supply.results[0].type, ColumnType::Int);
}

TEST(Interface, AllKeyViewReturnsBool) {
  const auto m = model(".decl recv_a(a: address)\n.decl k(a: address)[0]\n.public k\nr: k(a) :- recv_a(a).");
  const auto sigs = publicInterface(m);
  const auto it = std::find_if(sigs.begin(), sigs.end(), [](const auto& s) { return s.name == "k"; });
  ASSERT_NE(it, sigs.end());
  EXPECT_EQ(it->params, (std::vector<frontend::Column>{{"a", ColumnType::Address}}));
  ASSERT_EQ(it->results.size(), 1u);
  EXPECT_EQ(it->results[0].type, ColumnType::Bool);
}
