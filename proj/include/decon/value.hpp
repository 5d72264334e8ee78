#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace decon {

/// Fixed-width 256-bit word, little-endian limbs. All arithmetic wraps modulo
/// 2^256; overflow detection happens one level up in the checked operations.
class U256 {
 public:
  constexpr U256() = default;
  constexpr explicit U256(uint64_t v) : limbs_{v, 0, 0, 0} {}

  static U256 max();
  /// Bit pattern of the most negative signed value (1 << 255).
  static U256 signBit();

  uint64_t limb(int i) const { return limbs_[static_cast<size_t>(i)]; }
  void setLimb(int i, uint64_t v) { limbs_[static_cast<size_t>(i)] = v; }

  bool isZero() const { return (limbs_[0] | limbs_[1] | limbs_[2] | limbs_[3]) == 0; }
  bool isNegative() const { return (limbs_[3] >> 63) != 0; }
  bool bit(int i) const { return (limbs_[static_cast<size_t>(i / 64)] >> (i % 64)) & 1U; }
  /// Number of significant bits (0 for zero).
  int bitLength() const;

  friend U256 operator+(const U256& a, const U256& b);
  friend U256 operator-(const U256& a, const U256& b);
  friend U256 operator*(const U256& a, const U256& b);
  friend U256 operator<<(const U256& a, int shift);
  friend U256 operator>>(const U256& a, int shift);
  U256 operator~() const;
  U256 negate() const { return ~*this + U256(1); }

  /// Unsigned division; divisor must be non-zero.
  static void divmod(const U256& num, const U256& den, U256& quot, U256& rem);

  friend bool operator==(const U256&, const U256&) = default;
  /// Unsigned ordering.
  friend std::strong_ordering operator<=>(const U256& a, const U256& b);

  std::string toDecimal() const;
  std::string toHex() const;  // minimal lowercase digits, no prefix
  static std::optional<U256> fromDecimal(std::string_view digits);
  static std::optional<U256> fromHex(std::string_view digits);

 private:
  std::array<uint64_t, 4> limbs_{};
};

enum class ColumnType { Int, Uint, Bool, Address };

std::string_view typeName(ColumnType t);
std::optional<ColumnType> parseTypeName(std::string_view name);

/// A typed 256-bit value. Int is two's complement over the full word; Address
/// occupies the low 160 bits; Bool is 0 or 1.
struct Value {
  ColumnType type = ColumnType::Uint;
  U256 bits;

  static Value makeInt(int64_t v);
  static Value makeUint(uint64_t v);
  static Value makeBool(bool b);
  static Value makeAddress(uint64_t v);
  static Value fromBits(ColumnType t, U256 bits) { return Value{t, bits}; }

  bool asBool() const { return !bits.isZero(); }

  /// Canonical text: decimal for numbers, true/false, 0x-prefixed minimal even-length
  /// lowercase hex for addresses.
  std::string toString() const;

  friend bool operator==(const Value&, const Value&) = default;
  /// Total order usable as a map key (type first, then typed ordering).
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);
};

using Tuple = std::vector<Value>;

std::string tupleToString(const Tuple& t);

/// Parses a literal for a column of the given type. Accepts decimal (with a
/// leading '-' for Int), 0x-hex, and true/false for Bool. Returns nullopt if
/// the text does not denote a value of that type.
std::optional<Value> parseValue(std::string_view text, ColumnType type);

/// Ordering consistent with the column type (signed for Int).
std::strong_ordering compareValues(const Value& a, const Value& b);

enum class ArithOp { Add, Sub, Mul, Div };

std::string_view arithOpSymbol(ArithOp op);

/// Outcome of a checked arithmetic operation. `fault` is set when the result
/// leaves the 256-bit range of the operand type or the divisor is zero.
struct ArithResult {
  Value value;
  bool fault = false;
};

/// Checked arithmetic. Operands must share a type, which must be Int or Uint.
/// The wrapped result is computed first and overflow is detected from the
/// operand/result sign relations, mirroring the monitored overflow rules.
ArithResult checkedArith(ArithOp op, const Value& a, const Value& b);

}  // namespace decon
