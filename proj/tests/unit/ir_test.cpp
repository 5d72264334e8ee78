#include <gtest/gtest.h>

#include <regex>

#include "decon/frontend/parser.hpp"
#include "decon/ir/ir.hpp"
#include "helpers.hpp"

using namespace decon;
using namespace decon::ir;

namespace {

const analysis::Rule& rule(const analysis::ContractModel& m, const std::string& id) {
  for (const auto& r : m.rules) {
    if (r.id == id) return r;
  }
  throw std::runtime_error("no rule " + id);
}

std::vector<std::string> formatted(const std::vector<analysis::BodyLiteral>& body) {
  std::vector<std::string> out;
  for (const auto& l : body) out.push_back(analysis::formatBodyLiteral(l));
  return out;
}

}  // namespace

TEST(Triggers, TransactionRuleHasOnlyInsert) {
  const auto c = testutil::bundled("wallet");
  EXPECT_EQ(triggers(*c->model, rule(*c->model, "r1")), (std::set<Trigger>{{TriggerKind::Insert, "recv_mint"}}));
}

TEST(Triggers, ViewRuleHasInsertAndDelete) {
  const auto c = testutil::bundled("wallet");
  const std::set<Trigger> expected{{TriggerKind::Insert, "totalOut"},
                                   {TriggerKind::Delete, "totalOut"},
                                   {TriggerKind::Insert, "totalIn"},
                                   {TriggerKind::Delete, "totalIn"}};
  EXPECT_EQ(triggers(*c->model, rule(*c->model, "r5")), expected);
}

TEST(Triggers, ReservedRelationsExcluded) {
  const auto m = analysis::validate(
      frontend::parse(".decl recv_a(x: int)\n.decl h(s: address, x: int)\nr: h(s,x) :- recv_a(x), msgSender(s)."));
  EXPECT_EQ(triggers(m, m.rules[0]), (std::set<Trigger>{{TriggerKind::Insert, "recv_a"}}));
}

TEST(OrderBody, TransactionRuleKeepsSourceOrder) {
  const auto c = testutil::bundled("wallet");
  const auto& r = rule(*c->model, "r1");
  EXPECT_EQ(formatted(orderBody(*c->model, r, r.transactionLiteral)),
            (std::vector<std::string>{"recv_mint(p,n)", "msgSender(s)", "owner(s)", "n>0"}));
}

TEST(OrderBody, PointLookupBeforeArithmetic) {
  const auto c = testutil::bundled("wallet");
  const auto& r = rule(*c->model, "r5");
  const auto body = formatted(orderBody(*c->model, r, size_t{1}));
  ASSERT_EQ(body.size(), 4u);
  EXPECT_EQ(body[0], "totalIn(p,i)");
  const auto lookup = std::find(body.begin(), body.end(), "totalOut(p,o)");
  const auto assign = std::find_if(body.begin(), body.end(), [](const auto& s) { return s.find(":=") != std::string::npos; });
  ASSERT_NE(lookup, body.end());
  ASSERT_NE(assign, body.end());
  EXPECT_LT(lookup, assign);
}

TEST(OrderBody, SingleLiteralUnchanged) {
  const auto m = analysis::validate(frontend::parse(".decl a(x: int)\n.decl b(x: int)\nr: a(x) :- b(x)."));
  EXPECT_EQ(formatted(orderBody(m, m.rules[0], size_t{0})), std::vector<std::string>{"b(x)"});
}

TEST(UpdateFunction, MintNesting) {
  const auto c = testutil::bundled("wallet");
  const auto f = updateFunction(*c->model, rule(*c->model, "r1"), {TriggerKind::Insert, "recv_mint"});
  EXPECT_EQ(f.name, "updateMintOnRecvMintInsert_r1");
  const Statement* s = &f.body;
  std::vector<Statement::Kind> kinds;
  while (true) {
    if (s->kind != Statement::Kind::Sequence) kinds.push_back(s->kind);
    if (s->children.empty()) break;
    s = &s->children.front();
  }
  EXPECT_EQ(kinds, (std::vector<Statement::Kind>{Statement::Kind::Search, Statement::Kind::Search, Statement::Kind::If,
                                                 Statement::Kind::InsertTuple}));
  EXPECT_EQ(s->atom.relation, "mint");
}

TEST(UpdateFunction, DeleteTriggerEndsInDelete) {
  const auto c = testutil::bundled("wallet");
  const auto& r = rule(*c->model, "r5");
  const auto ins = updateFunction(*c->model, r, {TriggerKind::Insert, "totalIn"});
  const auto del = updateFunction(*c->model, r, {TriggerKind::Delete, "totalIn"});
  const auto strip = [](std::string text, const std::string& word) {
    return std::regex_replace(text, std::regex("\\b" + word + "\\b"), "X");
  };
  EXPECT_EQ(strip(formatStatement(ins.body), "insert"), strip(formatStatement(del.body), "delete"));
  EXPECT_EQ(del.name, "updateBalanceOfOnTotalInDelete_r5");
}

TEST(Compile, WalletJoinIndexesAndCaches) {
  const auto c = testutil::bundled("wallet");
  const auto& fns = c->functionsFor("totalIn", TriggerKind::Insert);
  EXPECT_TRUE(std::any_of(fns.begin(), fns.end(), [](const auto& f) { return f.ruleId == "r5"; }));
  EXPECT_TRUE(c->joinIndexRequirements.count({"transfer", {1}}));
  std::set<std::pair<std::string, size_t>> caches;
  for (const auto& s : c->aggregationCaches) caches.insert({s.ruleId, s.literalIndex});
  EXPECT_TRUE(caches.count({"r8", 1}));
  EXPECT_TRUE(caches.count({"r9", 1}));
}

TEST(Compile, Erc20SpentTotalCacheGroupsByOwnerAndSpender) {
  const auto c = testutil::bundled("erc20");
  const auto it = std::find_if(c->aggregationCaches.begin(), c->aggregationCaches.end(),
                               [](const auto& s) { return s.ruleId == "r2"; });
  ASSERT_NE(it, c->aggregationCaches.end());
  EXPECT_EQ(it->aggregation.groupVars, (std::vector<std::string>{"o", "s"}));
}

TEST(Compile, NoRules) {
  const auto m = std::make_shared<analysis::ContractModel>(analysis::validate(frontend::parse(".decl a(x: int)")));
  const auto c = compile(*m);
  EXPECT_TRUE(c.updateFunctions.empty());
  EXPECT_TRUE(c.joinIndexRequirements.empty());
  EXPECT_TRUE(c.aggregationCaches.empty());
}

TEST(Compile, FunctionNamesUnique) {
  for (const auto& name : fuzz::bundledContracts()) {
    const auto c = testutil::bundled(name);
    std::set<std::string> names;
    for (const auto* f : c->allFunctions()) EXPECT_TRUE(names.insert(f->name).second) << name << ": " << f->name;
  }
}

TEST(FormatIr, Deterministic) {
  for (const auto& name : fuzz::bundledContracts()) {
    EXPECT_EQ(formatIr(*testutil::bundled(name)), formatIr(*testutil::bundled(name))) << name;
  }
}

TEST(FormatIr, OneBlockPerFunction) {
  const auto c = testutil::bundled("wallet");
  const auto text = formatIr(*c);
  for (const auto* f : c->allFunctions()) {
    EXPECT_NE(text.find("function " + f->name + "("), std::string::npos) << f->name;
  }
}
