#include "sgain/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace sgain {

class Expression::Parser {
 public:
  Parser(std::string_view text, int dims, std::vector<Node>& nodes) : text_(text), dims_(dims), nodes_(nodes) {}

  int parse() {
    const int root = expr();
    skip_ws();
    if (pos_ != text_.size()) throw ExpressionError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return root;
  }

 private:
  int add(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) throw ExpressionError(std::string("expected '") + c + "'", pos_);
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = add({Op::add, 0.0, 0, lhs, term()});
      } else if (accept('-')) {
        lhs = add({Op::sub, 0.0, 0, lhs, term()});
      } else {
        return lhs;
      }
    }
  }
  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = add({Op::mul, 0.0, 0, lhs, unary()});
      } else if (accept('/')) {
        lhs = add({Op::div, 0.0, 0, lhs, unary()});
      } else {
        return lhs;
      }
    }
  }
  int unary() {
    if (accept('-')) return add({Op::negate, 0.0, 0, unary(), -1});
    return power();
  }
  int power() {
    const int base = atom();
    if (accept('^')) return add({Op::pow, 0.0, 0, base, unary()});
    return base;
  }
  int atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = expr();
      expect(')');
      return inner;
    }
    if (text_.substr(pos_, 3) == "pow") {
      pos_ += 3;
      expect('(');
      const int base = expr();
      expect(',');
      const int exponent = expr();
      expect(')');
      return add({Op::pow, 0.0, 0, base, exponent});
    }
    if (c == 'x') {
      const std::size_t start = pos_++;
      int index = 0;
      const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), index);
      if (ec != std::errc{}) throw ExpressionError("variable needs an index (x1..x" + std::to_string(dims_) + ")", start);
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      if (index < 1 || index > dims_) {
        throw ExpressionError("variable x" + std::to_string(index) + " out of range x1..x" + std::to_string(dims_), start);
      }
      return add({Op::variable, 0.0, index - 1, -1, -1});
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
      if (ec != std::errc{}) throw ExpressionError("malformed number", start);
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      return add({Op::number, value, 0, -1, -1});
    }
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  std::string_view text_;
  int dims_;
  std::vector<Node>& nodes_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view source, int dims) {
  Expression e;
  e.source_ = std::string(source);
  e.dims_ = dims;
  Parser p(e.source_, dims, e.nodes_);
  e.root_ = p.parse();
  return e;
}

double Expression::evaluate(std::span<const double> x) const { return eval_node(root_, x); }

double Expression::eval_node(int index, std::span<const double> x) const {
  const Node& n = nodes_[static_cast<std::size_t>(index)];
  switch (n.op) {
    case Op::number: return n.value;
    case Op::variable: return x[static_cast<std::size_t>(n.variable)];
    case Op::negate: return -eval_node(n.lhs, x);
    case Op::add: return eval_node(n.lhs, x) + eval_node(n.rhs, x);
    case Op::sub: return eval_node(n.lhs, x) - eval_node(n.rhs, x);
    case Op::mul: return eval_node(n.lhs, x) * eval_node(n.rhs, x);
    case Op::div: return eval_node(n.lhs, x) / eval_node(n.rhs, x);
    case Op::pow: return std::pow(eval_node(n.lhs, x), eval_node(n.rhs, x));
  }
  return 0.0;
}

}  // namespace sgain
