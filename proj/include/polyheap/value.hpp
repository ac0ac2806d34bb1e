#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace polyheap {

// Strictly positive rational, kept normalized.
struct Rat {
  int64_t num = 1;
  int64_t den = 1;

  static std::optional<Rat> make(__int128 n, __int128 d) {
    if (d == 0) return std::nullopt;
    if (d < 0) { n = -n; d = -d; }
    if (n <= 0) return std::nullopt;
    __int128 a = n, b = d;
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    n /= a; d /= a;
    if (n > INT64_MAX || d > INT64_MAX) return std::nullopt;
    return Rat{static_cast<int64_t>(n), static_cast<int64_t>(d)};
  }

  friend bool operator==(const Rat&, const Rat&) = default;
  friend std::strong_ordering operator<=>(const Rat& a, const Rat& b) {
    __int128 l = static_cast<__int128>(a.num) * b.den;
    __int128 r = static_cast<__int128>(b.num) * a.den;
    if (l < r) return std::strong_ordering::less;
    if (l > r) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
};

enum class Kind : uint8_t { Nil = 0, Bool, Nat, Rat, Str, List };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Nil: return "nil";
    case Kind::Bool: return "bool";
    case Kind::Nat: return "nat";
    case Kind::Rat: return "rat";
    case Kind::Str: return "str";
    case Kind::List: return "list";
  }
  return "?";
}

struct Nil {
  friend bool operator==(Nil, Nil) { return true; }
};

class Value {
 public:
  using ListT = std::vector<Value>;

  Value() : v_(Nil{}) {}
  static Value nil() { return Value(); }
  static Value boolean(bool b) { Value x; x.v_ = b; return x; }
  static Value nat(uint64_t n) { Value x; x.v_ = n; return x; }
  static Value rat(Rat r) { Value x; x.v_ = r; return x; }
  static Value str(std::string s) { Value x; x.v_ = std::move(s); return x; }
  static Value list(ListT l) { Value x; x.v_ = std::move(l); return x; }

  Kind kind() const { return static_cast<Kind>(v_.index()); }
  bool is_nil() const { return kind() == Kind::Nil; }
  bool is_bool() const { return kind() == Kind::Bool; }
  bool is_nat() const { return kind() == Kind::Nat; }
  bool is_rat() const { return kind() == Kind::Rat; }
  bool is_str() const { return kind() == Kind::Str; }
  bool is_list() const { return kind() == Kind::List; }

  bool as_bool() const { return std::get<bool>(v_); }
  uint64_t as_nat() const { return std::get<uint64_t>(v_); }
  const Rat& as_rat() const { return std::get<Rat>(v_); }
  const std::string& as_str() const { return std::get<std::string>(v_); }
  const ListT& as_list() const { return std::get<ListT>(v_); }

  bool is_true() const { return is_bool() && as_bool(); }

  friend bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
  friend std::strong_ordering operator<=>(const Value& a, const Value& b) {
    int c = compare(a, b);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  // Kind first, then content.
  static int compare(const Value& a, const Value& b) {
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    switch (a.kind()) {
      case Kind::Nil: return 0;
      case Kind::Bool: return (int)a.as_bool() - (int)b.as_bool();
      case Kind::Nat: return a.as_nat() < b.as_nat() ? -1 : (a.as_nat() > b.as_nat() ? 1 : 0);
      case Kind::Rat: {
        auto c = a.as_rat() <=> b.as_rat();
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
      }
      case Kind::Str: return a.as_str().compare(b.as_str()) < 0 ? -1 : (a.as_str() == b.as_str() ? 0 : 1);
      case Kind::List: {
        const auto& x = a.as_list();
        const auto& y = b.as_list();
        for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
          int c = compare(x[i], y[i]);
          if (c) return c;
        }
        if (x.size() == y.size()) return 0;
        return x.size() < y.size() ? -1 : 1;
      }
    }
    return 0;
  }

  std::string show() const {
    std::ostringstream os;
    print(os);
    return os.str();
  }

  void print(std::ostream& os) const {
    switch (kind()) {
      case Kind::Nil: os << "nil"; break;
      case Kind::Bool: os << (as_bool() ? "true" : "false"); break;
      case Kind::Nat: os << as_nat(); break;
      case Kind::Rat:
        if (as_rat().den == 1) os << "rat(" << as_rat().num << ")";
        else os << "rat(" << as_rat().num << ", " << as_rat().den << ")";
        break;
      case Kind::Str: print_quoted(os, as_str()); break;
      case Kind::List: {
        os << "[";
        bool first = true;
        for (const auto& e : as_list()) {
          if (!first) os << ", ";
          first = false;
          e.print(os);
        }
        os << "]";
        break;
      }
    }
  }

  static void print_quoted(std::ostream& os, const std::string& s) {
    os << '"';
    for (char c : s) {
      if (c == '"' || c == '\\') os << '\\' << c;
      else if (c == '\n') os << "\\n";
      else os << c;
    }
    os << '"';
  }

 private:
  std::variant<Nil, bool, uint64_t, Rat, std::string, ListT> v_;
};

inline std::ostream& operator<<(std::ostream& os, const Value& v) {
  v.print(os);
  return os;
}

// Error payload helper: ["Tag", args...]
inline Value payload(const std::string& tag, std::vector<Value> rest = {}) {
  Value::ListT l;
  l.push_back(Value::str(tag));
  for (auto& v : rest) l.push_back(std::move(v));
  return Value::list(std::move(l));
}

}  // namespace polyheap
