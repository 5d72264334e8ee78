#include <gtest/gtest.h>

#include "decon/runtime/naive.hpp"
#include "helpers.hpp"

using namespace decon;
using namespace decon::runtime;
using testutil::addr;
using testutil::num;
using testutil::unum;

TEST(Naive, SingleMint) {
  const auto c = testutil::bundled("wallet");
  const auto db = naiveEvaluate(*c->model, {{"constructor", {addr(0x0a)}, addr(0x0a)},
                                            {"recv_mint", {addr(1), num(100)}, addr(0x0a)}});
  EXPECT_EQ(db.at("balanceOf"), (std::set<Tuple>{{addr(1), num(100)}}));
  EXPECT_EQ(db.at("totalSupply"), (std::set<Tuple>{{num(100)}}));
}

TEST(Naive, EmptyBase) {
  const auto c = testutil::bundled("wallet");
  for (const auto& [rel, rows] : naiveEvaluate(*c->model, {})) EXPECT_TRUE(rows.empty()) << rel;
}

TEST(Naive, LatestTransferWins) {
  const auto c = testutil::bundled("erc721");
  const auto db = naiveEvaluate(*c->model, {{"constructor", {addr(0x0a)}, addr(0x0a)},
                                            {"recv_mint", {addr(0xaa), unum(7)}, addr(0x0a), unum(0), unum(1)},
                                            {"recv_transfer", {addr(0xbb), unum(7)}, addr(0xaa), unum(0), unum(5)}});
  EXPECT_EQ(db.at("latestTransfer"), (std::set<Tuple>{{unum(7), addr(0xaa), addr(0xbb), unum(5)}}));
  EXPECT_EQ(db.at("ownerOf"), (std::set<Tuple>{{unum(7), addr(0xbb)}}));
}

TEST(Naive, RejectedTransactionDerivesNothing) {
  const auto c = testutil::bundled("wallet");
  NaiveEvaluator oracle(*c->model);
  ASSERT_TRUE(oracle.commit({"constructor", {addr(0x0a)}, addr(0x0a)}));
  EXPECT_FALSE(oracle.derives({"recv_mint", {addr(1), num(5)}, addr(2)}));
  EXPECT_FALSE(oracle.commit({"recv_mint", {addr(1), num(5)}, addr(2)}));
  EXPECT_TRUE(oracle.relations().at("balanceOf").empty());
}

TEST(Naive, ViolationsVisible) {
  const auto c = testutil::bundled("wallet_buggy");
  NaiveEvaluator oracle(*c->model);
  oracle.commit({"constructor", {addr(0x0a)}, addr(0x0a)});
  oracle.commit({"recv_mint", {addr(1), num(100)}, addr(0x0a)});
  EXPECT_TRUE(oracle.violations().empty());
  oracle.commit({"recv_burn", {addr(1), num(120)}, addr(0x0a)});
  const auto v = oracle.violations();
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].first, "negativeBalance");
  EXPECT_EQ(v[0].second, (Tuple{addr(1), num(-20)}));
}
