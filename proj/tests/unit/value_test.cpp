#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "decon/value.hpp"

using namespace decon;
using boost::multiprecision::cpp_int;

namespace {

cpp_int wide(const Value& v) {
  cpp_int w("0x" + v.bits.toHex());
  if (v.type == ColumnType::Int && v.bits.isNegative()) w -= cpp_int(1) << 256;
  return w;
}

Value fromWide(ColumnType t, cpp_int w) {
  const cpp_int mod = cpp_int(1) << 256;
  w %= mod;
  if (w < 0) w += mod;
  std::ostringstream os;
  os << std::hex << w;
  return Value::fromBits(t, *U256::fromHex(os.str()));
}

}  // namespace

TEST(Value, AddressRendersAsCompactHex) {
  EXPECT_EQ(Value::makeAddress(1).toString(), "0x01");
  EXPECT_EQ(Value::makeAddress(0).toString(), "0x00");
  EXPECT_EQ(Value::makeAddress(0xabc).toString(), "0x0abc");
}

TEST(Value, SignedRendering) {
  EXPECT_EQ(Value::makeInt(-20).toString(), "-20");
  EXPECT_EQ(Value::makeInt(0).toString(), "0");
  EXPECT_EQ(Value::makeBool(true).toString(), "true");
}

TEST(Value, ParseByColumnType) {
  EXPECT_EQ(parseValue("-5", ColumnType::Int), Value::makeInt(-5));
  EXPECT_FALSE(parseValue("-5", ColumnType::Uint));
  EXPECT_EQ(parseValue("0x0a", ColumnType::Address), Value::makeAddress(10));
  EXPECT_EQ(parseValue("false", ColumnType::Bool), Value::makeBool(false));
  EXPECT_FALSE(parseValue("2", ColumnType::Bool));
  EXPECT_FALSE(parseValue("abc", ColumnType::Int));
}

TEST(Value, IntBoundsParse) {
  const std::string max = "57896044618658097711785492504343953926634992332820282019728792003956564819967";
  const auto v = parseValue(max, ColumnType::Int);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->toString(), max);
  EXPECT_FALSE(parseValue("57896044618658097711785492504343953926634992332820282019728792003956564819968",
                          ColumnType::Int));
  const auto min = parseValue("-57896044618658097711785492504343953926634992332820282019728792003956564819968",
                              ColumnType::Int);
  ASSERT_TRUE(min);
  EXPECT_EQ(min->bits, U256::signBit());
}

TEST(Value, SignedOrdering) {
  EXPECT_TRUE(compareValues(Value::makeInt(-1), Value::makeInt(1)) < 0);
  EXPECT_TRUE(compareValues(Value::makeUint(1), Value::makeUint(2)) < 0);
}

TEST(Arith, UintSubUnderflowFaults) {
  EXPECT_TRUE(checkedArith(ArithOp::Sub, Value::makeUint(1), Value::makeUint(2)).fault);
  EXPECT_FALSE(checkedArith(ArithOp::Sub, Value::makeInt(1), Value::makeInt(2)).fault);
}

TEST(Arith, DivisionByZeroFaults) {
  EXPECT_TRUE(checkedArith(ArithOp::Div, Value::makeInt(1), Value::makeInt(0)).fault);
}

TEST(Arith, IntMinOverMinusOneFaults) {
  const Value min = Value::fromBits(ColumnType::Int, U256::signBit());
  EXPECT_TRUE(checkedArith(ArithOp::Div, min, Value::makeInt(-1)).fault);
}

TEST(Arith, DivisionTruncatesTowardZero) {
  EXPECT_EQ(checkedArith(ArithOp::Div, Value::makeInt(-7), Value::makeInt(2)).value, Value::makeInt(-3));
}

TEST(Arith, AgreesWithBigIntegers) {
  std::mt19937_64 rng(7);
  const cpp_int mod = cpp_int(1) << 256;
  for (ColumnType t : {ColumnType::Int, ColumnType::Uint}) {
    const cpp_int lo = t == ColumnType::Int ? -(cpp_int(1) << 255) : cpp_int(0);
    const cpp_int hi = t == ColumnType::Int ? (cpp_int(1) << 255) - 1 : mod - 1;
    for (int i = 0; i < 2000; ++i) {
      auto draw = [&] {
        cpp_int w = 0;
        const int limbs = 1 + static_cast<int>(rng() % 4);
        for (int l = 0; l < limbs; ++l) w = (w << 64) | cpp_int(rng());
        return fromWide(t, w);
      };
      const Value a = draw(), b = draw();
      for (ArithOp op : {ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div}) {
        const cpp_int x = wide(a), y = wide(b);
        const auto r = checkedArith(op, a, b);
        if (op == ArithOp::Div && y == 0) {
          EXPECT_TRUE(r.fault);
          continue;
        }
        cpp_int exact;
        switch (op) {
          case ArithOp::Add: exact = x + y; break;
          case ArithOp::Sub: exact = x - y; break;
          case ArithOp::Mul: exact = x * y; break;
          case ArithOp::Div: exact = x / y; break;
        }
        const bool out = exact < lo || exact > hi;
        ASSERT_EQ(r.fault, out) << a.toString() << " " << arithOpSymbol(op) << " " << b.toString();
        if (!out) EXPECT_EQ(wide(r.value), exact);
      }
    }
  }
}
