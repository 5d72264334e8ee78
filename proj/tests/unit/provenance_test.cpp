#include <gtest/gtest.h>

#include "decon/provenance/provenance.hpp"
#include "decon/runtime/runtime.hpp"
#include "decon/runtime/script.hpp"
#include "helpers.hpp"

using namespace decon;
using namespace decon::provenance;
using namespace decon::runtime;
using testutil::addr;
using testutil::num;

namespace {

struct Traced {
  std::shared_ptr<const ir::CompiledContract> contract;
  Runtime rt;
};

Traced negativeBalanceRun() {
  auto c = testutil::bundled("wallet_buggy");
  Runtime rt(c, {true});
  runScript(rt, loadScript(*c->model, fuzz::scriptPath("negative_balance")));
  return {c, std::move(rt)};
}

size_t count(const std::string& text, const std::string& needle) {
  size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

void collectRules(const ProvTree& t, std::set<std::string>& out) {
  if (!t.rule.empty()) out.insert(t.rule);
  for (const auto& c : t.children) collectRules(c, out);
}

}  // namespace

TEST(Log, MintFiringReadsThenWrites) {
  const auto c = testutil::bundled("wallet");
  Runtime rt(c, {true});
  rt.instantiate({addr(0x0a)}, addr(0x0a));
  const size_t start = rt.provenanceLog().events().size();
  rt.execute({"mint", {addr(1), num(100)}, addr(0x0a)});
  std::vector<std::string> r1;
  const auto& events = rt.provenanceLog().events();
  for (size_t i = start; i < events.size(); ++i) {
    if (events[i].rule == "r1") r1.push_back(std::string(eventKindName(events[i].kind)) + " " + events[i].tuple.toString());
  }
  EXPECT_NE(std::find(r1.begin(), r1.end(), "read owner(0x0a)"), r1.end());
  EXPECT_NE(std::find(r1.begin(), r1.end(), "read msgSender(0x0a)"), r1.end());
  ASSERT_FALSE(r1.empty());
  EXPECT_EQ(r1.back(), "write mint(0x01,100)");
}

TEST(Log, RejectedTransactionWritesNothing) {
  const auto c = testutil::bundled("wallet");
  Runtime rt(c, {true});
  rt.instantiate({addr(0x0a)}, addr(0x0a));
  const size_t start = rt.provenanceLog().events().size();
  rt.execute({"mint", {addr(1), num(100)}, addr(0x02)});
  const auto& events = rt.provenanceLog().events();
  for (size_t i = start; i < events.size(); ++i) EXPECT_NE(events[i].kind, ProvEvent::Kind::Write);
}

TEST(Log, ViolationWriteRecordedInRevertedRun) {
  const auto t = negativeBalanceRun();
  const auto& events = t.rt.provenanceLog().events();
  EXPECT_TRUE(std::any_of(events.begin(), events.end(), [](const ProvEvent& e) {
    return e.kind == ProvEvent::Kind::Write && e.rule == "r14" && e.tuple.toString() == "negativeBalance(0x01,-20)";
  }));
}

TEST(Log, SequenceNumbersIncrease) {
  const auto t = negativeBalanceRun();
  uint64_t last = 0;
  for (const auto& e : t.rt.provenanceLog().events()) {
    EXPECT_GT(e.seq, last);
    last = e.seq;
    for (auto s : e.support) EXPECT_LT(s, e.seq);
  }
}

TEST(Log, JsonLinesShape) {
  const auto t = negativeBalanceRun();
  const auto text = toJsonLines(t.rt.provenanceLog());
  EXPECT_EQ(count(text, "\n"), t.rt.provenanceLog().events().size());
  EXPECT_NE(text.find(R"("kind":"write")"), std::string::npos);
  EXPECT_NE(text.find(R"("tuple":{"relation":"balanceOf","values":["0x01","-20"]})"), std::string::npos);
}

TEST(Explain, NegativeBalanceTree) {
  const auto t = negativeBalanceRun();
  const auto& model = *t.contract->model;
  const auto tree = explain(model, t.rt.provenanceLog(), parseTupleSpec(model, "balanceOf(0x01,-20)"));
  EXPECT_EQ(tree.rule, "r5");
  std::set<std::string> children;
  for (const auto& c : tree.children) children.insert(c.tuple.toString());
  EXPECT_EQ(children, (std::set<std::string>{"totalIn(0x01,100)", "totalOut(0x01,120)"}));
  std::set<std::string> rules;
  collectRules(tree, rules);
  EXPECT_TRUE(rules.count("r2"));
}

TEST(Explain, TransactionTupleIsLeaf) {
  const auto t = negativeBalanceRun();
  const auto& model = *t.contract->model;
  const auto tree = explain(model, t.rt.provenanceLog(), parseTupleSpec(model, "recv_mint(0x01,100)"));
  EXPECT_TRUE(tree.isLeaf());
  EXPECT_TRUE(tree.children.empty());
  const auto dot = renderDot(tree);
  EXPECT_EQ(count(dot, "->"), 0u);
}

TEST(Explain, NeverDerived) {
  const auto t = negativeBalanceRun();
  const auto& model = *t.contract->model;
  try {
    explain(model, t.rt.provenanceLog(), parseTupleSpec(model, "balanceOf(0x05,1)"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "TupleNeverDerived");
  }
}

TEST(Explain, BadTupleSpecs) {
  const auto c = testutil::bundled("wallet");
  for (const char* bad : {"balanceOf(0x01)", "balanceOf(0x01,abc)", "balanceOf 0x01,1", "balanceOf(0x01,1"}) {
    try {
      parseTupleSpec(*c->model, bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "BadTupleSpec") << bad;
    }
  }
  try {
    parseTupleSpec(*c->model, "nothing(1)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "UnknownRelation");
  }
}

TEST(Render, DotHasRuleLineage) {
  const auto t = negativeBalanceRun();
  const auto& model = *t.contract->model;
  const auto tree = explain(model, t.rt.provenanceLog(), parseTupleSpec(model, "negativeBalance(0x01,-20)"));
  const auto dot = renderDot(tree);
  EXPECT_EQ(dot, renderDot(tree));
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  for (const char* label : {"r14", "r5", "r8", "totalIn(0x01,100)", "totalOut(0x01,120)"}) {
    EXPECT_NE(dot.find(label), std::string::npos) << label;
  }
}

TEST(Render, TextAndJson) {
  const auto t = negativeBalanceRun();
  const auto& model = *t.contract->model;
  const auto tree = explain(model, t.rt.provenanceLog(), parseTupleSpec(model, "balanceOf(0x01,-20)"));
  const auto text = renderText(tree);
  EXPECT_EQ(text.rfind("balanceOf(0x01,-20)", 0), 0u);
  EXPECT_NE(text.find("totalIn(0x01,100)"), std::string::npos);
  const auto json = renderJson(tree);
  EXPECT_NE(json.find(R"("rule": "r5")"), std::string::npos);
}
