#pragma once

#include <string>
#include <vector>
#include <stdexcept>

namespace metastable {

// Small arithmetic expression language used for the coefficient functions
// b(x), a(x,c), g(x) in configuration files.
//
// Grammar: operators + - * / ^ (right-assoc), unary minus, parentheses,
// functions sin, cos, tanh, exp, abs, min, max; variables x and c; the
// constant pi; decimal literals.  Expressions compile to a flat postfix
// program evaluated with a small value stack.

struct ExprError : std::runtime_error {
    explicit ExprError(const std::string& msg) : std::runtime_error(msg) {}
};

class Expr {
  public:
    Expr() = default;

    // Compiles `text`; allowed variables are "x" and "c".
    static Expr parse(const std::string& text);

    double eval(double x, double c = 0.0) const;

    bool uses_c() const { return uses_c_; }
    const std::string& text() const { return text_; }
    bool empty() const { return prog_.empty(); }

  private:
    enum class OpCode : unsigned char {
        push, load_x, load_c,
        add, sub, mul, div, pow, neg,
        fsin, fcos, ftanh, fexp, fabs_, fmin, fmax
    };
    struct Op {
        OpCode code;
        double value = 0.0;
    };
    std::vector<Op> prog_;
    bool uses_c_ = false;
    std::string text_;

    friend class ExprParser;
};

}  // namespace metastable
