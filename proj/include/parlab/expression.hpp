#pragma once

// Small arithmetic expression evaluator for scenario data specs. Grammar:
// sum := prod (('+'|'-') prod)*, prod := pow (('*'|'/') pow)*,
// pow := unary ('^' pow)?, unary := '-' unary | atom,
// atom := number | ident | ident '(' sum (',' sum)* ')' | '(' sum ')'.
// Variables: x, y, t; constants pi, e.

#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace parlab {

class Expression {
 public:
  explicit Expression(const std::string& text) : text_(text), pos_(0) {
    root_ = parse_sum();
    skip_ws();
    if (pos_ != text_.size())
      throw std::invalid_argument("expression: trailing input at '" + text_.substr(pos_) + "'");
  }

  double eval(double x, double y, double t) const {
    Env env{x, y, t};
    return root_(env);
  }

 private:
  struct Env {
    double x, y, t;
  };
  using Node = std::function<double(const Env&)>;

  std::string text_;
  size_t pos_;
  Node root_;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("expression: " + what + " near position " + std::to_string(pos_) +
                                " in '" + text_ + "'");
  }

  Node parse_sum() {
    Node lhs = parse_prod();
    while (true) {
      if (eat('+')) {
        Node rhs = parse_prod();
        lhs = [lhs, rhs](const Env& e) { return lhs(e) + rhs(e); };
      } else if (eat('-')) {
        Node rhs = parse_prod();
        lhs = [lhs, rhs](const Env& e) { return lhs(e) - rhs(e); };
      } else {
        return lhs;
      }
    }
  }

  Node parse_prod() {
    Node lhs = parse_unary();
    while (true) {
      if (eat('*')) {
        Node rhs = parse_unary();
        lhs = [lhs, rhs](const Env& e) { return lhs(e) * rhs(e); };
      } else if (eat('/')) {
        Node rhs = parse_unary();
        lhs = [lhs, rhs](const Env& e) { return lhs(e) / rhs(e); };
      } else {
        return lhs;
      }
    }
  }

  // '^' binds tighter than unary minus: -x^2 is -(x^2)
  Node parse_unary() {
    if (eat('-')) {
      Node inner = parse_unary();
      return [inner](const Env& e) { return -inner(e); };
    }
    return parse_pow();
  }

  Node parse_pow() {
    Node base = parse_atom();
    if (eat('^')) {
      Node expo = parse_unary();  // right associative, allows 2^-3
      return [base, expo](const Env& e) { return std::pow(base(e), expo(e)); };
    }
    return base;
  }

  Node parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = std::stod(text_.substr(pos_), &used);
      pos_ += used;
      return [v](const Env&) { return v; };
    }
    if (c == '(') {
      ++pos_;
      Node inner = parse_sum();
      if (!eat(')')) fail("missing ')'");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name = text_.substr(start, pos_ - start);
      if (name == "x") return [](const Env& e) { return e.x; };
      if (name == "y") return [](const Env& e) { return e.y; };
      if (name == "t") return [](const Env& e) { return e.t; };
      if (name == "pi") return [](const Env&) { return M_PI; };
      if (name == "e") return [](const Env&) { return M_E; };
      if (!eat('(')) fail("unknown identifier '" + name + "'");
      std::vector<Node> args;
      if (!eat(')')) {
        args.push_back(parse_sum());
        while (eat(',')) args.push_back(parse_sum());
        if (!eat(')')) fail("missing ')' after arguments");
      }
      return make_call(name, std::move(args));
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Node make_call(const std::string& name, std::vector<Node> args) {
    auto unary = [&](double (*fn)(double)) {
      if (args.size() != 1) fail("'" + name + "' takes 1 argument");
      Node a = args[0];
      return Node([a, fn](const Env& e) { return fn(a(e)); });
    };
    auto binary = [&](double (*fn)(double, double)) {
      if (args.size() != 2) fail("'" + name + "' takes 2 arguments");
      Node a = args[0], b = args[1];
      return Node([a, b, fn](const Env& e) { return fn(a(e), b(e)); });
    };
    if (name == "sin") return unary(std::sin);
    if (name == "cos") return unary(std::cos);
    if (name == "tan") return unary(std::tan);
    if (name == "exp") return unary(std::exp);
    if (name == "log") return unary(std::log);
    if (name == "sqrt") return unary(std::sqrt);
    if (name == "abs") return unary(std::fabs);
    if (name == "pow") return binary(std::pow);
    if (name == "min") return binary([](double a, double b) { return std::min(a, b); });
    if (name == "max") return binary([](double a, double b) { return std::max(a, b); });
    fail("unknown function '" + name + "'");
  }
};

}  // namespace parlab
