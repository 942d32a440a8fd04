#include "qdcap/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "qdcap/error.hpp"

namespace qdcap {
namespace {

class Parser {
 public:
  Parser(std::string_view text, const ParameterMap& params) : text_(text), params_(params) {}

  double parse() {
    const double v = sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression \"" + std::string(text_) + "\": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double sum() {
    double v = product();
    for (;;) {
      if (accept('+')) v += product();
      else if (accept('-')) v -= product();
      else return v;
    }
  }

  double product() {
    double v = unary();
    for (;;) {
      if (accept('*')) {
        v *= unary();
      } else if (accept('/')) {
        const double d = unary();
        if (d == 0.0) fail("division by zero");
        v /= d;
      } else {
        return v;
      }
    }
  }

  double unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return primary();
  }

  double primary() {
    skip_space();
    if (accept('(')) {
      const double v = sum();
      if (!accept(')')) fail("missing ')'");
      return v;
    }
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const auto* first = text_.data() + pos_;
      const auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), v);
      if (ec != std::errc()) fail("bad number");
      pos_ += static_cast<std::size_t>(ptr - first);
      return v;
    }
    if (c == '$') ++pos_;
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected a number or parameter name");
    const std::string_view name = text_.substr(start, pos_ - start);
    const auto it = params_.find(name);
    if (it == params_.end()) fail("unresolved parameter '" + std::string(name) + "'");
    return it->second;
  }

  std::string_view text_;
  const ParameterMap& params_;
  std::size_t pos_ = 0;
};

}  // namespace

double evaluate_expression(std::string_view text, const ParameterMap& params) {
  const double v = Parser(text, params).parse();
  if (!std::isfinite(v)) throw ValidationError("expression \"" + std::string(text) + "\" is not finite");
  return v;
}

}  // namespace qdcap
