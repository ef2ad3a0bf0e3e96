#include "metastable/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace metastable {

namespace {

struct Token {
    enum Kind { number, ident, op, lparen, rparen, comma, end } kind;
    double value = 0.0;
    std::string name;
    char ch = 0;
    size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& s) : s_(s) {}

    Token next() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        Token t;
        t.pos = i_;
        if (i_ >= s_.size()) {
            t.kind = Token::end;
            return t;
        }
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* endp = nullptr;
            t.value = std::strtod(s_.c_str() + i_, &endp);
            if (endp == s_.c_str() + i_) throw ExprError("bad number at position " + std::to_string(i_));
            i_ = endp - s_.c_str();
            t.kind = Token::number;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i_;
            while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
            t.kind = Token::ident;
            t.name = s_.substr(i_, j - i_);
            i_ = j;
            return t;
        }
        ++i_;
        switch (c) {
            case '+': case '-': case '*': case '/': case '^':
                t.kind = Token::op; t.ch = c; return t;
            case '(': t.kind = Token::lparen; return t;
            case ')': t.kind = Token::rparen; return t;
            case ',': t.kind = Token::comma; return t;
            default:
                throw ExprError(std::string("unexpected character '") + c + "' at position " + std::to_string(t.pos));
        }
    }

  private:
    const std::string& s_;
    size_t i_ = 0;
};

}  // namespace

class ExprParser {
  public:
    explicit ExprParser(const std::string& s) : lex_(s), src_(s) { advance(); }

    Expr run() {
        Expr e;
        e.text_ = src_;
        parse_sum(e);
        if (cur_.kind != Token::end) throw ExprError("trailing input at position " + std::to_string(cur_.pos));
        return e;
    }

  private:
    Lexer lex_;
    Token cur_;
    std::string src_;

    void advance() { cur_ = lex_.next(); }

    void emit(Expr& e, Expr::OpCode code, double v = 0.0) { e.prog_.push_back({code, v}); }

    void parse_sum(Expr& e) {
        parse_product(e);
        while (cur_.kind == Token::op && (cur_.ch == '+' || cur_.ch == '-')) {
            char op = cur_.ch;
            advance();
            parse_product(e);
            emit(e, op == '+' ? Expr::OpCode::add : Expr::OpCode::sub);
        }
    }

    void parse_product(Expr& e) {
        parse_unary(e);
        while (cur_.kind == Token::op && (cur_.ch == '*' || cur_.ch == '/')) {
            char op = cur_.ch;
            advance();
            parse_unary(e);
            emit(e, op == '*' ? Expr::OpCode::mul : Expr::OpCode::div);
        }
    }

    void parse_unary(Expr& e) {
        if (cur_.kind == Token::op && cur_.ch == '-') {
            advance();
            parse_unary(e);
            emit(e, Expr::OpCode::neg);
            return;
        }
        if (cur_.kind == Token::op && cur_.ch == '+') {
            advance();
            parse_unary(e);
            return;
        }
        parse_power(e);
    }

    void parse_power(Expr& e) {
        parse_atom(e);
        if (cur_.kind == Token::op && cur_.ch == '^') {
            advance();
            parse_unary(e);  // right-associative, binds unary minus in the exponent
            emit(e, Expr::OpCode::pow);
        }
    }

    void parse_atom(Expr& e) {
        if (cur_.kind == Token::number) {
            emit(e, Expr::OpCode::push, cur_.value);
            advance();
            return;
        }
        if (cur_.kind == Token::lparen) {
            advance();
            parse_sum(e);
            expect_rparen();
            return;
        }
        if (cur_.kind == Token::ident) {
            std::string name = cur_.name;
            advance();
            if (cur_.kind == Token::lparen) {
                advance();
                int argc = parse_args(e);
                apply_function(e, name, argc);
                return;
            }
            if (name == "x") { emit(e, Expr::OpCode::load_x); return; }
            if (name == "c") { emit(e, Expr::OpCode::load_c); e.uses_c_ = true; return; }
            if (name == "pi") { emit(e, Expr::OpCode::push, 3.14159265358979323846); return; }
            throw ExprError("unknown identifier '" + name + "'");
        }
        throw ExprError("unexpected token at position " + std::to_string(cur_.pos));
    }

    int parse_args(Expr& e) {
        int argc = 1;
        parse_sum(e);
        while (cur_.kind == Token::comma) {
            advance();
            parse_sum(e);
            ++argc;
        }
        expect_rparen();
        return argc;
    }

    void expect_rparen() {
        if (cur_.kind != Token::rparen) throw ExprError("expected ')' at position " + std::to_string(cur_.pos));
        advance();
    }

    void apply_function(Expr& e, const std::string& name, int argc) {
        auto unary = [&](Expr::OpCode code) {
            if (argc != 1) throw ExprError(name + " takes one argument");
            emit(e, code);
        };
        if (name == "sin") return unary(Expr::OpCode::fsin);
        if (name == "cos") return unary(Expr::OpCode::fcos);
        if (name == "tanh") return unary(Expr::OpCode::ftanh);
        if (name == "exp") return unary(Expr::OpCode::fexp);
        if (name == "abs") return unary(Expr::OpCode::fabs_);
        if (name == "min" || name == "max") {
            if (argc != 2) throw ExprError(name + " takes two arguments");
            emit(e, name == "min" ? Expr::OpCode::fmin : Expr::OpCode::fmax);
            return;
        }
        throw ExprError("unknown function '" + name + "'");
    }
};

Expr Expr::parse(const std::string& text) { return ExprParser(text).run(); }

double Expr::eval(double x, double c) const {
    double stack[64];
    int top = -1;
    for (const Op& op : prog_) {
        switch (op.code) {
            case OpCode::push: stack[++top] = op.value; break;
            case OpCode::load_x: stack[++top] = x; break;
            case OpCode::load_c: stack[++top] = c; break;
            case OpCode::add: --top; stack[top] += stack[top + 1]; break;
            case OpCode::sub: --top; stack[top] -= stack[top + 1]; break;
            case OpCode::mul: --top; stack[top] *= stack[top + 1]; break;
            case OpCode::div: --top; stack[top] /= stack[top + 1]; break;
            case OpCode::pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
            case OpCode::neg: stack[top] = -stack[top]; break;
            case OpCode::fsin: stack[top] = std::sin(stack[top]); break;
            case OpCode::fcos: stack[top] = std::cos(stack[top]); break;
            case OpCode::ftanh: stack[top] = std::tanh(stack[top]); break;
            case OpCode::fexp: stack[top] = std::exp(stack[top]); break;
            case OpCode::fabs_: stack[top] = std::fabs(stack[top]); break;
            case OpCode::fmin: --top; stack[top] = std::fmin(stack[top], stack[top + 1]); break;
            case OpCode::fmax: --top; stack[top] = std::fmax(stack[top], stack[top + 1]); break;
        }
    }
    return top >= 0 ? stack[top] : 0.0;
}

}  // namespace metastable
