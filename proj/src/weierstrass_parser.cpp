#include <cctype>
#include <cstdlib>
#include <optional>

#include "k3lab/error.hpp"
#include "k3lab/weierstrass.hpp"

namespace k3lab::weierstrass {

namespace {

constexpr int kMaxIntermediateDegree = 256;

// A parsed subexpression: exact until a float literal is involved.
struct Value {
  bool numeric = false;
  ExactPoly exact;
  ComplexPoly approx;

  static Value of(ExactPoly p) { return {false, std::move(p), {}}; }
  static Value of(ComplexPoly p) { return {true, {}, std::move(p)}; }

  int degree() const { return numeric ? approx.degree() : exact.degree(); }
  bool is_zero() const { return numeric ? approx.is_zero() : exact.is_zero(); }
  ComplexPoly as_numeric() const { return numeric ? approx : ComplexPoly(exact.to_complex()); }
};

class Parser {
 public:
  Parser(const std::string& text, ParseMode mode) : s_(text), mode_(mode) {}

  WeierstrassData run() {
    std::optional<Value> h8, h12;
    skip_ws();
    while (pos_ < s_.size()) {
      const std::size_t name_pos = pos_;
      const std::string name = identifier();
      if (name != "h8" && name != "h12") fail("expected 'h8' or 'h12'", name_pos);
      std::optional<Value>& slot = name == "h8" ? h8 : h12;
      if (slot) fail("section '" + name + "' given twice", name_pos);
      expect('=');
      skip_ws();
      const std::size_t expr_pos = pos_;
      Value v = expression();
      const int cap = name == "h8" ? kCap8 : kCap12;
      if (v.degree() > cap)
        fail("degree overflow: " + name + " has degree " + std::to_string(v.degree()) + " > " + std::to_string(cap),
             expr_pos);
      slot = std::move(v);
      skip_ws();
      if (pos_ < s_.size()) {
        if (s_[pos_] != ';') fail("expected ';' or end of input", pos_);
        ++pos_;
        skip_ws();
      }
    }
    if (!h8) fail("missing section 'h8'", pos_);
    if (!h12) fail("missing section 'h12'", pos_);
    if (h8->is_zero() && h12->is_zero()) fail("h8 and h12 are both identically zero", 0);

    const bool numeric = mode_ == ParseMode::Numeric || h8->numeric || h12->numeric;
    if (numeric) return WeierstrassData::numeric(h8->as_numeric(), h12->as_numeric());
    return WeierstrassData::exact(h8->exact, h12->exact);
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const { throw ParseError(msg, at); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an identifier", start);
    return s_.substr(start, pos_ - start);
  }

  bool starts_primary() {
    skip_ws();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return c == '(' || c == '.' || std::isalnum(static_cast<unsigned char>(c));
  }

  void check_degree(const Value& v, std::size_t at) const {
    if (v.degree() > kMaxIntermediateDegree) fail("intermediate degree too large", at);
  }

  static Value add(const Value& a, const Value& b, bool subtract) {
    if (a.numeric || b.numeric) {
      const ComplexPoly x = a.as_numeric(), y = b.as_numeric();
      return Value::of(subtract ? x - y : x + y);
    }
    return Value::of(subtract ? a.exact - b.exact : a.exact + b.exact);
  }

  static Value mul(const Value& a, const Value& b) {
    if (a.numeric || b.numeric) return Value::of(a.as_numeric() * b.as_numeric());
    return Value::of(a.exact * b.exact);
  }

  Value divide(const Value& a, const Value& b, std::size_t at) const {
    if (b.degree() != 0) fail(b.is_zero() ? "division by zero" : "division by a non-constant polynomial", at);
    if (a.numeric || b.numeric) return Value::of((1.0 / b.as_numeric().coeff(0)) * a.as_numeric());
    return Value::of((Gaussian(1) / b.exact.coeff(0)) * a.exact);
  }

  Value expression() {
    Value acc = term();
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '+' && s_[pos_] != '-')) return acc;
      const bool minus = s_[pos_] == '-';
      const std::size_t at = pos_++;
      acc = add(acc, term(), minus);
      check_degree(acc, at);
    }
  }

  Value term() {
    Value acc = unary();
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && (s_[pos_] == '*' || s_[pos_] == '/')) {
        const bool div = s_[pos_] == '/';
        const std::size_t at = pos_++;
        Value rhs = unary();
        acc = div ? divide(acc, rhs, at) : mul(acc, rhs);
        check_degree(acc, at);
      } else if (starts_primary()) {
        // Juxtaposition, as in 3t^2 or 2i.
        const std::size_t at = pos_;
        acc = mul(acc, power());
        check_degree(acc, at);
      } else {
        return acc;
      }
    }
  }

  Value unary() {
    skip_ws();
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const bool minus = s_[pos_++] == '-';
      Value v = unary();
      return minus ? add(Value::of(ExactPoly()), v, true) : v;
    }
    return power();
  }

  Value power() {
    Value base = primary();
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '^') return base;
    const std::size_t at = pos_++;
    const long e = exponent();
    if (e < 0) {
      if (base.degree() != 0) fail("negative exponent needs a non-zero constant base", at);
      return divide(Value::of(ExactPoly(1)), raise(base, static_cast<unsigned long>(-e), at), at);
    }
    return raise(base, static_cast<unsigned long>(e), at);
  }

  Value raise(const Value& base, unsigned long e, std::size_t at) const {
    if (base.degree() > 0 && static_cast<unsigned long>(base.degree()) * e > kMaxIntermediateDegree)
      fail("intermediate degree too large", at);
    if (e > 4096) fail("exponent too large", at);
    if (!base.numeric) return Value::of(poly::pow(base.exact, static_cast<unsigned>(e)));
    ComplexPoly r({Complex(1.0)});
    for (unsigned long k = 0; k < e; ++k) r = r * base.approx;
    return Value::of(r);
  }

  long exponent() {
    skip_ws();
    bool paren = false;
    if (pos_ < s_.size() && s_[pos_] == '(') {
      paren = true;
      ++pos_;
      skip_ws();
    }
    bool negative = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      negative = s_[pos_] == '-';
      ++pos_;
      skip_ws();
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be an integer literal", start);
    if (pos_ - start > 6) fail("exponent too large", start);
    const long e = std::stol(s_.substr(start, pos_ - start));
    if (paren) expect(')');
    return negative ? -e : e;
  }

  Value primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Value v = expression();
      expect(')');
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t at = pos_;
      const std::string id = identifier();
      if (id == "t") return Value::of(ExactPoly::t());
      if (id == "i") return Value::of(ExactPoly(Gaussian(Rational(0), Rational(1))));
      fail("unknown identifier '" + id + "' (only t and i are allowed)", at);
    }
    fail(std::string("unexpected character '") + c + "'", pos_);
  }

  Value number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    bool is_float = false;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      is_float = true;
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        is_float = true;
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    const std::string lit = s_.substr(start, pos_ - start);
    if (lit == ".") fail("malformed number", start);
    if (is_float) {
      if (mode_ == ParseMode::Exact) fail("float literal '" + lit + "' not allowed in exact mode", start);
      return Value::of(ComplexPoly({Complex(std::strtod(lit.c_str(), nullptr), 0.0)}));
    }
    return Value::of(ExactPoly(Gaussian(Rational(Integer(lit)))));
  }

  const std::string& s_;
  ParseMode mode_;
  std::size_t pos_ = 0;
};

}  // namespace

WeierstrassData parse_weierstrass(const std::string& text, ParseMode mode) { return Parser(text, mode).run(); }

}  // namespace k3lab::weierstrass
