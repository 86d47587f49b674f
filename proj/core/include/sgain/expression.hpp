#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sgain {

class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& message, std::size_t position)
      : std::invalid_argument(message + " at offset " + std::to_string(position)), position_(position) {}
  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Arithmetic expression over variables x1..xd.
///
/// Grammar (recursive descent):
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | 'x' digits | 'pow' '(' expr ',' expr ')' | '(' expr ')'
class Expression {
 public:
  static Expression parse(std::string_view source, int dims);

  [[nodiscard]] double evaluate(std::span<const double> x) const;
  [[nodiscard]] const std::string& source() const noexcept { return source_; }
  [[nodiscard]] int dims() const noexcept { return dims_; }

 private:
  enum class Op { number, variable, negate, add, sub, mul, div, pow };
  struct Node {
    Op op = Op::number;
    double value = 0.0;
    int variable = 0;
    int lhs = -1;
    int rhs = -1;
  };
  class Parser;

  [[nodiscard]] double eval_node(int index, std::span<const double> x) const;

  std::string source_;
  int dims_ = 0;
  int root_ = -1;
  std::vector<Node> nodes_;
};

}  // namespace sgain
