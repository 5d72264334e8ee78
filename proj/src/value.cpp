#include "decon/value.hpp"

#include <algorithm>
#include <cassert>

namespace decon {

namespace {

constexpr uint64_t kAddressTopMask = 0xffffffffULL;  // limb 2 keeps 32 bits

int hexDigit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool fitsAddress(const U256& v) {
  return v.limb(3) == 0 && (v.limb(2) & ~kAddressTopMask) == 0;
}

// Signed helpers over two's complement words.
bool isPositive(const U256& v) { return !v.isNegative() && !v.isZero(); }

U256 absValue(const U256& v) { return v.isNegative() ? v.negate() : v; }

U256 signedDiv(const U256& a, const U256& b) {
  U256 q;
  U256 r;
  U256::divmod(absValue(a), absValue(b), q, r);
  return a.isNegative() != b.isNegative() ? q.negate() : q;
}

}  // namespace

U256 U256::max() {
  U256 v;
  v.limbs_.fill(~0ULL);
  return v;
}

U256 U256::signBit() {
  U256 v;
  v.limbs_[3] = 1ULL << 63;
  return v;
}

int U256::bitLength() const {
  for (int i = 3; i >= 0; --i) {
    if (limbs_[static_cast<size_t>(i)] != 0) {
      return i * 64 + 64 - __builtin_clzll(limbs_[static_cast<size_t>(i)]);
    }
  }
  return 0;
}

U256 operator+(const U256& a, const U256& b) {
  U256 r;
  unsigned __int128 carry = 0;
  for (size_t i = 0; i < 4; ++i) {
    unsigned __int128 s = static_cast<unsigned __int128>(a.limbs_[i]) + b.limbs_[i] + carry;
    r.limbs_[i] = static_cast<uint64_t>(s);
    carry = s >> 64;
  }
  return r;
}

U256 operator-(const U256& a, const U256& b) { return a + b.negate(); }

U256 operator*(const U256& a, const U256& b) {
  U256 r;
  for (size_t i = 0; i < 4; ++i) {
    unsigned __int128 carry = 0;
    for (size_t j = 0; i + j < 4; ++j) {
      unsigned __int128 cur = static_cast<unsigned __int128>(a.limbs_[i]) * b.limbs_[j] +
                              r.limbs_[i + j] + carry;
      r.limbs_[i + j] = static_cast<uint64_t>(cur);
      carry = cur >> 64;
    }
  }
  return r;
}

U256 operator<<(const U256& a, int shift) {
  if (shift <= 0) return a;
  if (shift >= 256) return U256();
  U256 r;
  const int limbShift = shift / 64;
  const int bitShift = shift % 64;
  for (int i = 3; i >= limbShift; --i) {
    uint64_t v = a.limbs_[static_cast<size_t>(i - limbShift)] << bitShift;
    if (bitShift != 0 && i - limbShift - 1 >= 0) {
      v |= a.limbs_[static_cast<size_t>(i - limbShift - 1)] >> (64 - bitShift);
    }
    r.limbs_[static_cast<size_t>(i)] = v;
  }
  return r;
}

U256 operator>>(const U256& a, int shift) {
  if (shift <= 0) return a;
  if (shift >= 256) return U256();
  U256 r;
  const int limbShift = shift / 64;
  const int bitShift = shift % 64;
  for (int i = 0; i + limbShift < 4; ++i) {
    uint64_t v = a.limbs_[static_cast<size_t>(i + limbShift)] >> bitShift;
    if (bitShift != 0 && i + limbShift + 1 < 4) {
      v |= a.limbs_[static_cast<size_t>(i + limbShift + 1)] << (64 - bitShift);
    }
    r.limbs_[static_cast<size_t>(i)] = v;
  }
  return r;
}

U256 U256::operator~() const {
  U256 r;
  for (size_t i = 0; i < 4; ++i) r.limbs_[i] = ~limbs_[i];
  return r;
}

std::strong_ordering operator<=>(const U256& a, const U256& b) {
  for (int i = 3; i >= 0; --i) {
    const auto idx = static_cast<size_t>(i);
    if (a.limbs_[idx] != b.limbs_[idx]) return a.limbs_[idx] <=> b.limbs_[idx];
  }
  return std::strong_ordering::equal;
}

void U256::divmod(const U256& num, const U256& den, U256& quot, U256& rem) {
  assert(!den.isZero());
  quot = U256();
  rem = U256();
  if (num < den) {
    rem = num;
    return;
  }
  if (den.limbs_[1] == 0 && den.limbs_[2] == 0 && den.limbs_[3] == 0) {
    // Single-limb divisor: schoolbook with 128-bit intermediates.
    const uint64_t d = den.limbs_[0];
    unsigned __int128 r = 0;
    for (int i = 3; i >= 0; --i) {
      const auto idx = static_cast<size_t>(i);
      unsigned __int128 cur = (r << 64) | num.limbs_[idx];
      quot.limbs_[idx] = static_cast<uint64_t>(cur / d);
      r = cur % d;
    }
    rem = U256(static_cast<uint64_t>(r));
    return;
  }
  for (int i = num.bitLength() - 1; i >= 0; --i) {
    rem = rem << 1;
    if (num.bit(i)) rem.limbs_[0] |= 1;
    if (rem >= den) {
      rem = rem - den;
      quot.limbs_[static_cast<size_t>(i / 64)] |= 1ULL << (i % 64);
    }
  }
}

std::string U256::toDecimal() const {
  if (isZero()) return "0";
  std::string out;
  U256 cur = *this;
  const U256 ten18(1000000000000000000ULL);
  while (!cur.isZero()) {
    U256 q;
    U256 r;
    divmod(cur, ten18, q, r);
    std::string chunk = std::to_string(r.limbs_[0]);
    if (!q.isZero()) chunk.insert(0, 18 - chunk.size(), '0');
    out.insert(0, chunk);
    cur = q;
  }
  return out;
}

std::string U256::toHex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  if (isZero()) return "0";
  std::string out;
  for (int i = bitLength() - 1 - ((bitLength() - 1) % 4); i >= 0; i -= 4) {
    const int nibble = static_cast<int>((*this >> i).limbs_[0] & 0xf);
    out.push_back(kDigits[nibble]);
  }
  return out;
}

std::optional<U256> U256::fromDecimal(std::string_view digits) {
  if (digits.empty()) return std::nullopt;
  U256 v;
  const U256 ten(10);
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    U256 next = v * ten + U256(static_cast<uint64_t>(c - '0'));
    // Detect wrap: next / 10 must give back v.
    U256 q;
    U256 r;
    divmod(next, ten, q, r);
    if (q != v) return std::nullopt;
    v = next;
  }
  return v;
}

std::optional<U256> U256::fromHex(std::string_view digits) {
  if (digits.empty()) return std::nullopt;
  size_t start = 0;
  while (start + 1 < digits.size() && digits[start] == '0') ++start;
  if (digits.size() - start > 64) return std::nullopt;
  U256 v;
  for (size_t i = start; i < digits.size(); ++i) {
    const int d = hexDigit(digits[i]);
    if (d < 0) return std::nullopt;
    v = (v << 4) + U256(static_cast<uint64_t>(d));
  }
  return v;
}

std::string_view typeName(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "int";
    case ColumnType::Uint: return "uint";
    case ColumnType::Bool: return "bool";
    case ColumnType::Address: return "address";
  }
  return "?";
}

std::optional<ColumnType> parseTypeName(std::string_view name) {
  if (name == "int") return ColumnType::Int;
  if (name == "uint") return ColumnType::Uint;
  if (name == "bool") return ColumnType::Bool;
  if (name == "address") return ColumnType::Address;
  return std::nullopt;
}

Value Value::makeInt(int64_t v) {
  U256 bits(static_cast<uint64_t>(v < 0 ? -(v + 1) : v));
  if (v < 0) bits = ~bits;
  return Value{ColumnType::Int, bits};
}

Value Value::makeUint(uint64_t v) { return Value{ColumnType::Uint, U256(v)}; }
Value Value::makeBool(bool b) { return Value{ColumnType::Bool, U256(b ? 1 : 0)}; }
Value Value::makeAddress(uint64_t v) { return Value{ColumnType::Address, U256(v)}; }

std::string Value::toString() const {
  switch (type) {
    case ColumnType::Int:
      return bits.isNegative() ? "-" + bits.negate().toDecimal() : bits.toDecimal();
    case ColumnType::Uint:
      return bits.toDecimal();
    case ColumnType::Bool:
      return bits.isZero() ? "false" : "true";
    case ColumnType::Address: {
      std::string hex = bits.toHex();
      if (hex.size() % 2) hex.insert(0, "0");
      return "0x" + hex;
    }
  }
  return "?";
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.type != b.type) return a.type <=> b.type;
  return compareValues(a, b);
}

std::strong_ordering compareValues(const Value& a, const Value& b) {
  if (a.type == ColumnType::Int && a.bits.isNegative() != b.bits.isNegative()) {
    return a.bits.isNegative() ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  return a.bits <=> b.bits;
}

std::string tupleToString(const Tuple& t) {
  std::string out = "(";
  for (size_t i = 0; i < t.size(); ++i) {
    if (i != 0) out += ",";
    out += t[i].toString();
  }
  return out + ")";
}

std::optional<Value> parseValue(std::string_view text, ColumnType type) {
  if (text.empty()) return std::nullopt;
  if (type == ColumnType::Bool) {
    if (text == "true") return Value::makeBool(true);
    if (text == "false") return Value::makeBool(false);
    return std::nullopt;
  }
  bool negative = false;
  if (text.front() == '-') {
    if (type != ColumnType::Int) return std::nullopt;
    negative = true;
    text.remove_prefix(1);
  }
  std::optional<U256> magnitude;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    magnitude = U256::fromHex(text.substr(2));
  } else {
    magnitude = U256::fromDecimal(text);
  }
  if (!magnitude) return std::nullopt;
  switch (type) {
    case ColumnType::Int:
      if (negative) {
        if (*magnitude > U256::signBit()) return std::nullopt;
        return Value{type, magnitude->negate()};
      }
      if (magnitude->isNegative()) return std::nullopt;
      return Value{type, *magnitude};
    case ColumnType::Uint:
      return Value{type, *magnitude};
    case ColumnType::Address:
      if (!fitsAddress(*magnitude)) return std::nullopt;
      return Value{type, *magnitude};
    case ColumnType::Bool:
      break;
  }
  return std::nullopt;
}

std::string_view arithOpSymbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

ArithResult checkedArith(ArithOp op, const Value& a, const Value& b) {
  assert(a.type == b.type);
  const U256& x = a.bits;
  const U256& y = b.bits;
  ArithResult out{Value{a.type, U256()}, false};

  if (a.type == ColumnType::Uint) {
    switch (op) {
      case ArithOp::Add:
        out.value.bits = x + y;
        out.fault = out.value.bits < x;
        break;
      case ArithOp::Sub:
        out.value.bits = x - y;
        out.fault = x < y;
        break;
      case ArithOp::Mul: {
        out.value.bits = x * y;
        if (!x.isZero()) {
          U256 q;
          U256 r;
          U256::divmod(out.value.bits, x, q, r);
          out.fault = q != y;
        }
        break;
      }
      case ArithOp::Div:
        if (y.isZero()) {
          out.fault = true;
        } else {
          U256 r;
          U256::divmod(x, y, out.value.bits, r);
        }
        break;
    }
    return out;
  }

  // Signed.
  const U256 minValue = U256::signBit();
  const U256 minusOne = U256::max();
  switch (op) {
    case ArithOp::Add: {
      const U256 c = x + y;
      out.value.bits = c;
      out.fault = (isPositive(x) && isPositive(y) && c.isNegative()) ||
                  (x.isNegative() && y.isNegative() && !c.isNegative());
      break;
    }
    case ArithOp::Sub: {
      const U256 c = x - y;
      out.value.bits = c;
      out.fault = (!x.isNegative() && y.isNegative() && c.isNegative()) ||
                  (x.isNegative() && isPositive(y) && !c.isNegative());
      break;
    }
    case ArithOp::Mul: {
      const U256 c = x * y;
      out.value.bits = c;
      if (!x.isZero()) {
        // c / a must give back b; the lone case the quotient check cannot see
        // is -1 * MIN, whose quotient itself wraps back to MIN.
        out.fault = signedDiv(c, x) != y || (x == minusOne && y == minValue);
      }
      break;
    }
    case ArithOp::Div:
      if (y.isZero() || (x == minValue && y == minusOne)) {
        out.fault = true;
      } else {
        out.value.bits = signedDiv(x, y);
      }
      break;
  }
  return out;
}

}  // namespace decon
