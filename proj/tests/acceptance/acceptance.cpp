// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "decon/backend/solidity.hpp"
#include "decon/pipeline.hpp"
#include "decon/provenance/provenance.hpp"
#include "fuzz.hpp"

using namespace decon;
using runtime::Outcome;
using runtime::Runtime;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << "  " << title << ": " << v.detail << std::endl;
}

std::shared_ptr<const ir::CompiledContract> load(const std::string& name) {
  return compileFile(fuzz::contractPath(name));
}

runtime::TransactionScript script(const ir::CompiledContract& c, const std::string& name) {
  return runtime::loadScript(*c.model, fuzz::scriptPath(name));
}

provenance::TupleRef tuple(const ir::CompiledContract& c, const std::string& spec) {
  return provenance::parseTupleSpec(*c.model, spec);
}

bool wrote(const provenance::Log& log, const provenance::TupleRef& t) {
  for (const auto& e : log.events()) {
    if (e.kind == provenance::ProvEvent::Kind::Write && e.tuple == t) return true;
  }
  return false;
}

/// Expected derivation shape: a tuple, the rule deriving it, and the
/// expected children (unordered). Children not listed are not checked when
/// `exhaustive` is false.
struct Shape {
  std::string tuple;
  std::string rule;
  std::vector<Shape> children;
  bool exhaustive = true;
};

bool matches(const provenance::ProvTree& t, const Shape& s, std::string& why) {
  if (t.tuple.toString() != s.tuple) {
    why = "expected " + s.tuple + ", found " + t.tuple.toString();
    return false;
  }
  if (t.rule != s.rule) {
    why = s.tuple + " derived by '" + t.rule + "', expected '" + s.rule + "'";
    return false;
  }
  if (s.exhaustive && t.children.size() != s.children.size()) {
    why = s.tuple + " has " + std::to_string(t.children.size()) + " children, expected " +
          std::to_string(s.children.size());
    return false;
  }
  for (const auto& want : s.children) {
    bool found = false;
    std::string last;
    for (const auto& c : t.children) {
      if (c.tuple.toString() == want.tuple) {
        found = matches(c, want, last);
        break;
      }
    }
    if (!found) {
      why = last.empty() ? s.tuple + " lacks child " + want.tuple : last;
      return false;
    }
  }
  return true;
}

bool containsRule(const provenance::ProvTree& t, const std::string& rule, const std::string& childTuple) {
  if (t.rule == rule) {
    for (const auto& c : t.children) {
      if (c.tuple.toString() == childTuple) return true;
    }
  }
  for (const auto& c : t.children) {
    if (containsRule(c, rule, childTuple)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

Verdict oracleEquivalence() {
  const auto start = std::chrono::steady_clock::now();
  size_t scripts = 0, txs = 0, committed = 0;
  std::mt19937_64 rng(20240501);
  for (const auto& name : fuzz::bundledContracts()) {
    const auto c = load(name);
    for (int i = 0; i < 200; ++i) {
      const auto s = fuzz::randomScript(*c->model, name, rng, 50);
      Runtime rt(c);
      const auto res = runtime::runScript(rt, s, {false, true});
      ++scripts;
      txs += res.receipts.size();
      for (const auto& r : res.receipts) committed += r.outcome == Outcome::Committed;
      if (!res.failures.empty()) {
        return {false, name + " script " + std::to_string(i) + ": " + res.failures.front()};
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream d;
  d << scripts << " scripts, " << txs << " transactions (" << committed << " committed), " << secs << " s";
  return {secs < 60.0, d.str()};
}

Verdict walletScenario() {
  const auto buggy = load("wallet_buggy");
  Runtime rt(buggy, {true});
  const auto res = runtime::runScript(rt, script(*buggy, "negative_balance"));
  if (res.receipts.size() != 3) return {false, "expected 3 receipts"};
  const auto& burn = res.receipts[2];
  if (burn.outcome != Outcome::Reverted) return {false, "burn was " + std::string(outcomeName(burn.outcome))};
  if (burn.violations.size() != 1 || burn.violations[0].toString() != "negativeBalance(0x01,-20)") {
    return {false, "unexpected violations"};
  }
  for (const char* spec : {"totalIn(0x01,100)", "totalOut(0x01,120)"}) {
    if (!wrote(rt.provenanceLog(), tuple(*buggy, spec))) return {false, std::string(spec) + " never derived"};
  }
  const auto fixed = load("wallet");
  Runtime rt2(fixed);
  const auto res2 = runtime::runScript(rt2, script(*fixed, "negative_balance"));
  for (const auto& r : res2.receipts) {
    if (r.outcome == Outcome::Reverted) return {false, "corrected wallet reverted"};
  }
  return {true, "burn reverted with negativeBalance(0x01,-20); corrected burn " +
                    std::string(outcomeName(res2.receipts.back().outcome))};
}

Verdict transientViolation() {
  const auto c = load("wallet");
  const auto& model = *c->model;
  if (!model.violations.count("unequalTotalSupply")) return {false, "property not installed"};
  auto run = [&](bool eager) {
    Runtime rt(c, {false, eager});
    rt.instantiate({Value::makeAddress(0x0a)}, Value::makeAddress(0x0a));
    const auto setup = rt.execute({"mint", {Value::makeAddress(1), Value::makeInt(100)}, Value::makeAddress(0x0a)});
    if (setup.outcome != Outcome::Committed) throw std::runtime_error("setup mint did not commit");
    const auto rc = rt.execute({"mint", {Value::makeAddress(2), Value::makeInt(50)}, Value::makeAddress(0x0a)});
    return std::pair{rc, rt.transientViolationSeen()};
  };
  const auto [deferred, seenDeferred] = run(false);
  const auto [eager, seenEager] = run(true);
  const bool ok = deferred.outcome == Outcome::Committed && seenDeferred && eager.outcome == Outcome::Reverted &&
                  seenEager;
  return {ok, "deferred " + std::string(outcomeName(deferred.outcome)) + " (transient seen: " +
                  (seenDeferred ? "yes" : "no") + "), eager " + std::string(outcomeName(eager.outcome))};
}

Verdict provenanceFidelity() {
  const auto wallet = load("wallet_buggy");
  Runtime rt(wallet, {true});
  runtime::runScript(rt, script(*wallet, "negative_balance"));
  const auto tree = provenance::explain(*wallet->model, rt.provenanceLog(), tuple(*wallet, "balanceOf(0x01,-20)"));
  const Shape expectWallet{"balanceOf(0x01,-20)",
                           "r5",
                           {{"totalIn(0x01,100)", "r9", {{"transfer(0x00,0x01,100)", "r6", {}, false}}, true},
                            {"totalOut(0x01,120)",
                             "r8",
                             {{"transfer(0x01,0x00,120)", "r7", {}, false}, {"transfer(0x00,0x01,100)", "r6", {}, false}},
                             true}},
                           true};
  std::string why;
  if (!matches(tree, expectWallet, why)) return {false, "wallet: " + why};

  const auto erc20 = load("erc20_buggy");
  Runtime rt2(erc20, {true});
  runtime::runScript(rt2, script(*erc20, "erc20_allowance"));
  const auto tree2 = provenance::explain(*erc20->model, rt2.provenanceLog(), tuple(*erc20, "allowance(0xaa,0x55,10)"));
  const Shape expectErc20{"allowance(0xaa,0x55,10)",
                          "r3",
                          {{"allowanceTotal(0xaa,0x55,100)", "r4", {}, false},
                           {"spentTotal(0xaa,0x55,90)", "r2", {{"transferFrom(0xbb,0x77,0x55,90)", "r1", {}, false}}, false}},
                          true};
  if (!matches(tree2, expectErc20, why)) return {false, "erc20: " + why};
  return {true, "balanceOf(0x01,-20) <- r5 and allowance(a,s,10) <- r3 trees match"};
}

Verdict erc721Semantics() {
  const auto c = load("erc721");
  Runtime rt(c);
  const auto res = runtime::runScript(rt, script(*c, "erc721_lifecycle"), {true, true});
  if (!res.failures.empty()) return {false, res.failures.front()};
  if (!rt.state().tables.at("tokenNoOwner").rows.empty()) return {false, "tokenNoOwner not empty"};

  const auto buggy = load("erc721_buggy");
  Runtime rb(buggy, {true});
  const auto rbRes = runtime::runScript(rb, script(*buggy, "erc721_stale_approval"));
  if (rbRes.receipts.back().outcome != Outcome::Committed) return {false, "buggy transferFrom not committed"};
  const auto tree =
      provenance::explain(*buggy->model, rb.provenanceLog(), tuple(*buggy, "transferFrom(0x55,0xbb,0x77,7,7)"));
  if (!containsRule(tree, "r5", "approve(0xaa,0x55,7)")) return {false, "explain does not show r5 on the stale approval"};

  Runtime rf(c);
  const auto rfRes = runtime::runScript(rf, script(*c, "erc721_stale_approval"));
  if (rfRes.receipts.back().outcome != Outcome::Rejected) return {false, "corrected transferFrom not rejected"};
  return {true, "ownerOf/exists/burn views hold; stale approval explained via r5 and rejected under r5'"};
}

Verdict atomicity() {
  std::mt19937_64 rng(77);
  std::map<std::string, size_t> kinds;
  size_t checked = 0;
  std::vector<std::string> names = fuzz::bundledContracts();
  names.push_back("wallet_buggy");
  names.push_back("erc20_buggy");
  for (const auto& name : names) {
    const auto c = load(name);
    for (int i = 0; i < 40; ++i) {
      const auto s = fuzz::randomScript(*c->model, name, rng, 50, {true});
      Runtime rt(c);
      std::vector<const runtime::ScriptTx*> all{&*s.constructor};
      for (const auto& t : s.txs) all.push_back(&t);
      for (const auto* tx : all) {
        const runtime::ContractState before = rt.state();
        const auto rc = rt.execute(tx->request);
        if (rc.outcome == Outcome::Committed) continue;
        ++checked;
        ++kinds[rc.outcome == Outcome::Rejected ? "rejected" : rc.reason];
        if (!(rt.state() == before)) return {false, name + ": state changed by a " + std::string(outcomeName(rc.outcome)) +
                                                        " transaction"};
      }
    }
  }
  std::string detail = std::to_string(checked) + " non-committed transactions restored exactly (";
  for (const auto& [k, n] : kinds) detail += k + " " + std::to_string(n) + ", ";
  detail.resize(detail.size() - 2);
  detail += ")";
  const bool allKinds = kinds.count("rejected") && kinds.count("Overflow") && kinds.count("Violation");
  return {allKinds, detail};
}

Verdict costLocality() {
  const auto c = load("wallet");
  std::vector<uint64_t> visits;
  for (int n : {10, 100, 1000}) {
    Runtime rt(c);
    const Value owner = Value::makeAddress(0x0a);
    rt.instantiate({owner}, owner);
    for (int i = 0; i < n; ++i) {
      rt.execute({"mint", {Value::makeAddress(0x1000 + i), Value::makeInt(10)}, owner});
    }
    rt.resetRowVisits();
    const auto rc = rt.execute({"mint", {Value::makeAddress(0x9999), Value::makeInt(10)}, owner});
    if (rc.outcome != Outcome::Committed) return {false, "mint did not commit"};
    visits.push_back(rt.rowVisits());
  }
  const bool equal = visits[0] == visits[1] && visits[1] == visits[2];
  return {equal, "row visits at N=10/100/1000: " + std::to_string(visits[0]) + "/" + std::to_string(visits[1]) + "/" +
                     std::to_string(visits[2])};
}

Verdict emitterGoldens() {
  size_t compiled = 0;
  bool solc = std::system("solc --version > /dev/null 2>&1") == 0;
  for (const auto& name : fuzz::bundledContracts()) {
    const auto c = load(name);
    const auto a = backend::emit(*c, {});
    const auto b = backend::emit(*c, {});
    if (a.sourceText != b.sourceText) return {false, name + ": emission differs between runs"};
    backend::goldenCompare(a, std::string(DECON_GOLDEN_DIR) + "/" + name + ".sol");
    if (solc) {
      const auto path = std::filesystem::temp_directory_path() / (name + ".sol");
      writeFile(path.string(), a.sourceText);
      if (std::system(("solc --bin " + path.string() + " > /dev/null 2>&1").c_str()) != 0) {
        return {false, name + ": solc rejects the emitted source"};
      }
      ++compiled;
    }
  }
  return {true, "5 contracts deterministic, goldens match; " +
                    (solc ? std::to_string(compiled) + " compiled with solc" : std::string("solc not available"))};
}

Verdict overflowSemantics() {
  using boost::multiprecision::cpp_int;
  std::mt19937_64 rng(4242);
  const cpp_int two256 = cpp_int(1) << 256;
  const cpp_int intMin = -(cpp_int(1) << 255), intMax = (cpp_int(1) << 255) - 1;
  auto random = [&](ColumnType t) {
    U256 bits;
    std::string hex;
    const int mode = rng() % 4;
    const int digits = mode == 0 ? 64 : mode == 1 ? 1 + rng() % 8 : mode == 2 ? 32 : 63;
    for (int i = 0; i < digits; ++i) hex += "0123456789abcdef"[rng() % 16];
    cpp_int w("0x" + hex);
    if (t == ColumnType::Int && rng() % 2) w = two256 - w;
    w %= two256;
    std::ostringstream os;
    os << std::hex << w;
    return Value::fromBits(t, *U256::fromHex(os.str()));
  };
  auto wide = [&](const Value& v) {
    cpp_int w("0x" + v.bits.toHex());
    if (v.type == ColumnType::Int && w > intMax) w -= two256;
    return w;
  };
  size_t cases = 0, faults = 0;
  for (ColumnType t : {ColumnType::Int, ColumnType::Uint}) {
    for (ArithOp op : {ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div}) {
      for (int i = 0; i < 20000; ++i) {
        const Value a = random(t);
        const Value b = (i % 97 == 0) ? Value::fromBits(t, U256(0)) : random(t);
        const cpp_int x = wide(a), y = wide(b);
        bool expectFault = false;
        cpp_int exact;
        switch (op) {
          case ArithOp::Add: exact = x + y; break;
          case ArithOp::Sub: exact = x - y; break;
          case ArithOp::Mul: exact = x * y; break;
          case ArithOp::Div:
            if (y == 0) {
              expectFault = true;
            } else {
              exact = x / y;
            }
            break;
        }
        if (!expectFault) {
          expectFault = t == ColumnType::Int ? (exact < intMin || exact > intMax) : (exact < 0 || exact >= two256);
        }
        const auto r = checkedArith(op, a, b);
        ++cases;
        faults += expectFault;
        if (r.fault != expectFault) {
          return {false, std::string(typeName(t)) + " " + std::string(arithOpSymbol(op)) + " on " + a.toString() +
                             ", " + b.toString() + ": fault " + (r.fault ? "raised" : "missed")};
        }
        if (!expectFault && wide(r.value) != exact) return {false, "wrong result for " + a.toString() + ", " + b.toString()};
      }
    }
  }
  return {true, std::to_string(cases) + " operand pairs agree with wide arithmetic (" + std::to_string(faults) +
                    " faults)"};
}

}  // namespace

int main() {
  report(1, "oracle equivalence", oracleEquivalence);
  report(2, "buggy wallet burn", walletScenario);
  report(3, "transient violation", transientViolation);
  report(4, "provenance fidelity", provenanceFidelity);
  report(5, "erc721 semantics", erc721Semantics);
  report(6, "atomicity fuzz", atomicity);
  report(7, "cost locality", costLocality);
  report(8, "emitter determinism and goldens", emitterGoldens);
  report(9, "overflow semantics", overflowSemantics);
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures;
}
