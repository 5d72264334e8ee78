#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "decon/backend/solidity.hpp"
#include "helpers.hpp"

using namespace decon;
using namespace decon::backend;

namespace {

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

std::string tempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("decon_backend_" + name)).string();
}

}  // namespace

TEST(Emit, WalletBalanceOfStorageAndView) {
  const auto src = emit(*testutil::bundled("wallet"), {}).sourceText;
  EXPECT_TRUE(contains(src, "struct BalanceOfTuple {\n    int256 n;\n    bool valid;\n"));
  EXPECT_TRUE(contains(src, "mapping(address => BalanceOfTuple) balanceOfTable;"));
  EXPECT_TRUE(contains(src, "function balanceOf(address p) public view returns (int256)"));
  EXPECT_TRUE(contains(src, "BalanceOfTuple memory row = balanceOfTable[p];"));
  EXPECT_TRUE(contains(src, "function totalSupply() public view returns (int256)"));
  EXPECT_TRUE(contains(src, "function mint(address p, int256 amount) public payable returns (bool)"));
}

TEST(Emit, ViolationRevertGuardedByCount) {
  const auto src = emit(*testutil::bundled("wallet"), {}).sourceText;
  const std::regex guard(R"(if \(negativeBalanceCount > 0\) \{[^}]*revert\("negativeBalance"\))");
  EXPECT_TRUE(std::regex_search(src, guard));
  EXPECT_TRUE(contains(src, "NegativeBalanceKey[] negativeBalanceKeys;"));
  EXPECT_TRUE(contains(src, "checkViolations();"));
}

TEST(Emit, NoInstrumentDropsChecks) {
  EmitOptions opts;
  opts.instrumentViolations = false;
  const auto src = emit(*testutil::bundled("wallet"), opts).sourceText;
  EXPECT_FALSE(contains(src, "checkViolations"));
}

TEST(Emit, ProvenanceEvents) {
  EmitOptions opts;
  opts.emitProvenanceEvents = true;
  const auto src = emit(*testutil::bundled("wallet"), opts).sourceText;
  EXPECT_TRUE(contains(src, "event ProvWrite("));
  EXPECT_TRUE(contains(src, "emit ProvWrite(\"r5\", \"balanceOf\""));
  EXPECT_FALSE(contains(emit(*testutil::bundled("wallet"), {}).sourceText, "ProvWrite"));
}

TEST(Emit, CommittedTransactionsEmitEvents) {
  const auto src = emit(*testutil::bundled("wallet"), {}).sourceText;
  EXPECT_TRUE(contains(src, "event Mint(address p, int256 amount);"));
  EXPECT_TRUE(contains(src, "emit Mint(p, amount);"));
}

TEST(Emit, SendUsesCheckedCall) {
  const auto src = emit(*testutil::bundled("crowdsale"), {}).sourceText;
  EXPECT_TRUE(contains(src, ".call{value: pendingSends[i].amount}(\"\")"));
  EXPECT_TRUE(contains(src, "require(ok"));
  EXPECT_TRUE(contains(src, "uint256 n_") || contains(src, "msg.value"));
}

TEST(Emit, EmptyContractShell) {
  const auto c = compileSource("");
  EmitOptions opts;
  opts.contractName = "Empty";
  const auto src = emit(*c, opts).sourceText;
  EXPECT_TRUE(contains(src, "pragma solidity ^0.8.0;"));
  EXPECT_TRUE(contains(src, "contract Empty {"));
  EXPECT_EQ(src.back(), '\n');
}

TEST(Emit, PragmaAndName) {
  EmitOptions opts;
  opts.solidityPragma = ">=0.8.19";
  opts.contractName = "Wallet";
  const auto src = emit(*testutil::bundled("wallet"), opts).sourceText;
  EXPECT_TRUE(contains(src, "pragma solidity >=0.8.19;"));
  EXPECT_TRUE(contains(src, "contract Wallet {"));
}

TEST(Emit, InvalidNameRejected) {
  for (const char* bad : {"1abc", "with space", "contract"}) {
    EmitOptions opts;
    opts.contractName = bad;
    try {
      emit(*testutil::bundled("wallet"), opts);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "InvalidName");
    }
  }
}

TEST(Emit, InterfaceSummaryMatchesModel) {
  const auto c = testutil::bundled("erc20");
  EXPECT_EQ(emit(*c, {}).interfaceSummary, analysis::publicInterface(*c->model));
}

TEST(Emit, EveryUpdateFunctionDefinedOnce) {
  const std::regex def(R"(function (update\w+)\()");
  for (const auto& name : fuzz::bundledContracts()) {
    const auto c = testutil::bundled(name);
    const auto src = emit(*c, {}).sourceText;
    std::multiset<std::string> defined;
    for (auto it = std::sregex_iterator(src.begin(), src.end(), def); it != std::sregex_iterator(); ++it) {
      defined.insert((*it)[1]);
    }
    std::multiset<std::string> expected;
    for (const auto* f : c->allFunctions()) expected.insert(f->name);
    EXPECT_EQ(defined, expected) << name;
  }
}

TEST(Emit, ReservedWordsSanitized) {
  const auto c = compileSource(".decl recv_set(from: address, value: uint)\n.decl stored(from: address, value: uint)[0]\n"
                               ".public stored\nr: stored(f,v) :- recv_set(f,v).");
  const auto src = emit(*c, {}).sourceText;
  EXPECT_TRUE(contains(src, "function set(address from, uint256 value)"));
  EXPECT_TRUE(contains(emit(*compileSource(".decl recv_a(address: address)\n.decl b(address: address)[0]\n.public b\n"
                                          "r: b(x) :- recv_a(x)."),
                            {})
                           .sourceText,
                      "address address_"));
}

TEST(Golden, MatchesItself) {
  const auto a = emit(*testutil::bundled("wallet"), {});
  const auto path = tempPath("self.sol");
  writeFile(path, a.sourceText);
  EXPECT_NO_THROW(goldenCompare(a, path));
  std::filesystem::remove(path);
}

TEST(Golden, BundledGoldensCurrent) {
  for (const auto& name : fuzz::bundledContracts()) {
    EXPECT_NO_THROW(goldenCompare(emit(*testutil::bundled(name), {}), std::string(DECON_GOLDEN_DIR) + "/" + name + ".sol"))
        << name;
  }
}

TEST(Golden, AddedRuleDiverges) {
  const auto path = tempPath("old.sol");
  writeFile(path, emit(*testutil::bundled("wallet"), {}).sourceText);
  const auto src = readFile(fuzz::contractPath("wallet")) + "\n.decl big(p: address)[0]\nr99: big(p) :- balanceOf(p,n), n > 1000.\n.public big\n";
  try {
    goldenCompare(emit(*compileSource(src), {}), path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "GoldenMismatch");
    const std::string msg = e.what();
    EXPECT_TRUE(contains(msg, "first divergent line "));
    EXPECT_TRUE(contains(msg, "\n@@ "));
    EXPECT_TRUE(contains(msg, "\n+"));
  }
  std::filesystem::remove(path);
}

TEST(Golden, MissingIsAnError) {
  try {
    goldenCompare(emit(*testutil::bundled("wallet"), {}), tempPath("does_not_exist.sol"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "GoldenMissing");
  }
}

TEST(Diff, EqualTextsGiveNothing) { EXPECT_EQ(unifiedDiff("a\nb\n", "a\nb\n", "x", "y"), ""); }

TEST(Diff, SingleChangeWithContext) {
  const auto d = unifiedDiff("1\n2\n3\n4\n5\n6\n7\n8\n", "1\n2\n3\n4\nfive\n6\n7\n8\n", "old", "new");
  EXPECT_EQ(d, "--- old\n+++ new\n@@ -2,7 +2,7 @@\n 2\n 3\n 4\n-5\n+five\n 6\n 7\n 8\n");
}
