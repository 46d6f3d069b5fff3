#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compactode/dual.hpp"
#include "compactode/error.hpp"

namespace compactode {

enum class Func { Exp, Ln, Sin, Cos, Tanh, Sech, Sqrt, Abs };

inline const char* func_name(Func f) {
    switch (f) {
        case Func::Exp: return "exp";
        case Func::Ln: return "ln";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tanh: return "tanh";
        case Func::Sech: return "sech";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
    }
    return "?";
}

/// Immutable scalar expression over named variables. Parsed once into a
/// postorder tape; evaluation is a stack walk, generic over the scalar type
/// so the same tape yields values, first and second derivatives.
class Expr {
public:
    static Expr parse(std::string_view src);

    /// Free variables in first-appearance order.
    [[nodiscard]] const std::vector<std::string>& vars() const { return vars_; }

    [[nodiscard]] bool has_var(std::string_view name) const {
        for (const auto& v : vars_)
            if (v == name) return true;
        return false;
    }

    [[nodiscard]] int var_index(std::string_view name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return static_cast<int>(i);
        return -1;
    }

    /// Evaluate with values aligned to vars().
    [[nodiscard]] double eval_packed(std::span<const double> values) const {
        return run<double>([&](int i) { return values[i]; });
    }

    [[nodiscard]] double eval_packed(std::initializer_list<double> values) const {
        return eval_packed(std::span<const double>(values.begin(), values.size()));
    }

    /// First derivative with respect to vars()[seed].
    [[nodiscard]] Dual1 eval_dual(std::span<const double> values, int seed) const {
        return run<Dual1>([&](int i) { return Dual1(values[i], i == seed ? 1.0 : 0.0); });
    }

    /// Value, first and second derivative with respect to vars()[seed].
    [[nodiscard]] Dual2 eval_dual2(std::span<const double> values, int seed) const {
        return run<Dual2>([&](int i) {
            return i == seed ? seed2(values[i]) : Dual2(Dual1(values[i], 0.0), Dual1(0.0, 0.0));
        });
    }

    [[nodiscard]] double eval(const std::map<std::string, double>& env) const {
        return eval_packed(pack(env));
    }

    [[nodiscard]] double deriv(std::string_view var, const std::map<std::string, double>& env) const {
        auto packed = pack(env);
        int idx = var_index(var);
        if (idx < 0) return 0.0; // expression does not depend on var
        return eval_dual(packed, idx).d;
    }

    /// Text form that parses back to an evaluation-equivalent expression.
    [[nodiscard]] std::string render() const;

    [[nodiscard]] const std::string& source() const { return source_; }

private:
    enum class Op : unsigned char { Const, Var, Neg, Add, Sub, Mul, Div, Pow, PowInt, Call };

    struct Instr {
        Op op;
        Func fn = Func::Exp;
        int var = -1;
        long long ipow = 0;
        double num = 0.0;
    };

    std::vector<Instr> tape_;
    std::vector<std::string> vars_;
    std::string source_;
    std::size_t depth_ = 0;

    [[nodiscard]] std::vector<double> pack(const std::map<std::string, double>& env) const {
        std::vector<double> values(vars_.size());
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            auto it = env.find(vars_[i]);
            if (it == env.end()) throw UnboundVariable(vars_[i]);
            values[i] = it->second;
        }
        return values;
    }

    template <typename S, typename Load>
    S run(Load&& load) const {
        // reused scratch; a fresh vector per call would churn the allocator
        thread_local std::vector<S> stack;
        stack.clear();
        stack.reserve(depth_);
        for (const Instr& in : tape_) {
            switch (in.op) {
                case Op::Const:
                    stack.push_back(S(in.num));
                    break;
                case Op::Var:
                    stack.push_back(load(in.var));
                    break;
                case Op::Neg:
                    stack.back() = -stack.back();
                    break;
                case Op::Add: {
                    S b = stack.back();
                    stack.pop_back();
                    stack.back() = stack.back() + b;
                    break;
                }
                case Op::Sub: {
                    S b = stack.back();
                    stack.pop_back();
                    stack.back() = stack.back() - b;
                    break;
                }
                case Op::Mul: {
                    S b = stack.back();
                    stack.pop_back();
                    stack.back() = stack.back() * b;
                    break;
                }
                case Op::Div: {
                    S b = stack.back();
                    stack.pop_back();
                    if (value_of(b) == 0.0) throw DomainError("division by zero");
                    stack.back() = stack.back() / b;
                    break;
                }
                case Op::Pow: {
                    S b = stack.back();
                    stack.pop_back();
                    if (value_of(stack.back()) <= 0.0)
                        throw DomainError("power of non-positive base with non-integer exponent");
                    stack.back() = pow(stack.back(), b);
                    break;
                }
                case Op::PowInt:
                    stack.back() = pow_int(stack.back(), in.ipow);
                    break;
                case Op::Call:
                    stack.back() = apply(in.fn, stack.back());
                    break;
            }
            if (!all_finite(stack.back()))
                throw DomainError("non-finite value in expression evaluation");
        }
        return stack.back();
    }

    template <typename S>
    static S apply(Func f, const S& a) {
        switch (f) {
            case Func::Exp: return exp(a);
            case Func::Ln:
                if (value_of(a) <= 0.0) throw DomainError("ln of non-positive argument");
                return log(a);
            case Func::Sin: return sin(a);
            case Func::Cos: return cos(a);
            case Func::Tanh: return tanh(a);
            case Func::Sech: return sech(a);
            case Func::Sqrt:
                if (value_of(a) < 0.0) throw DomainError("sqrt of negative argument");
                return sqrt(a);
            case Func::Abs: return abs(a);
        }
        throw DomainError("unreachable");
    }

    friend class ExprParser;
};

namespace detail {

inline bool lookup_func(std::string_view name, Func& out) {
    if (name == "exp") out = Func::Exp;
    else if (name == "ln") out = Func::Ln;
    else if (name == "sin") out = Func::Sin;
    else if (name == "cos") out = Func::Cos;
    else if (name == "tanh") out = Func::Tanh;
    else if (name == "sech") out = Func::Sech;
    else if (name == "sqrt") out = Func::Sqrt;
    else if (name == "abs") out = Func::Abs;
    else return false;
    return true;
}

} // namespace detail

/// Recursive-descent parser. Precedence, loosest to tightest:
/// + -, then * /, then unary -, then ^ (right-associative).
class ExprParser {
public:
    explicit ExprParser(std::string_view src) : src_(src) {}

    Expr parse() {
        Expr e;
        e.source_ = std::string(src_);
        out_ = &e;
        skip_ws();
        parse_sum();
        skip_ws();
        if (pos_ != src_.size()) throw SyntaxError("unexpected trailing input", pos_);
        e.depth_ = max_depth_;
        out_ = nullptr;
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    Expr* out_ = nullptr;
    std::size_t cur_depth_ = 0, max_depth_ = 0;

    void emit(Expr::Instr in, int stack_delta) {
        out_->tape_.push_back(in);
        cur_depth_ += stack_delta > 0 ? static_cast<std::size_t>(stack_delta) : 0;
        if (stack_delta < 0) cur_depth_ -= static_cast<std::size_t>(-stack_delta);
        if (cur_depth_ > max_depth_) max_depth_ = cur_depth_;
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    [[nodiscard]] char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

    bool accept(char c) {
        skip_ws();
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void parse_sum() {
        parse_term();
        for (;;) {
            skip_ws();
            if (accept('+')) {
                parse_term();
                emit({Expr::Op::Add}, -1);
            } else if (accept('-')) {
                parse_term();
                emit({Expr::Op::Sub}, -1);
            } else {
                return;
            }
        }
    }

    void parse_term() {
        parse_unary();
        for (;;) {
            skip_ws();
            if (accept('*')) {
                parse_unary();
                emit({Expr::Op::Mul}, -1);
            } else if (accept('/')) {
                parse_unary();
                emit({Expr::Op::Div}, -1);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        skip_ws();
        if (accept('-')) {
            parse_unary();
            // fold literal negation so integer exponents stay literals
            if (out_->tape_.back().op == Expr::Op::Const)
                out_->tape_.back().num = -out_->tape_.back().num;
            else
                emit({Expr::Op::Neg}, 0);
            return;
        }
        parse_power();
    }

    void parse_power() {
        parse_primary();
        skip_ws();
        if (accept('^')) {
            std::size_t before = out_->tape_.size();
            parse_unary(); // right-associative, exponent may carry unary -
            bool const_expo = out_->tape_.size() == before + 1 &&
                              out_->tape_.back().op == Expr::Op::Const;
            if (const_expo) {
                double e = out_->tape_.back().num;
                if (e == std::floor(e) && std::abs(e) <= 1e9) {
                    out_->tape_.pop_back();
                    Expr::Instr in{Expr::Op::PowInt};
                    in.ipow = static_cast<long long>(e);
                    emit(in, 0);
                    return;
                }
            }
            emit({Expr::Op::Pow}, -1);
        }
    }

    void parse_primary() {
        skip_ws();
        std::size_t at = pos_;
        char c = peek();
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!accept(')')) throw SyntaxError("expected ')'", pos_);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number(at);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            std::string name(src_.substr(start, pos_ - start));
            skip_ws();
            if (peek() == '(') {
                Func fn;
                if (!detail::lookup_func(name, fn)) throw UnknownFunction(name, start);
                ++pos_;
                parse_sum();
                skip_ws();
                if (peek() == ',') throw ArityError(name, pos_);
                if (!accept(')')) throw SyntaxError("expected ')'", pos_);
                Expr::Instr in{Expr::Op::Call};
                in.fn = fn;
                emit(in, 0);
                return;
            }
            Expr::Instr in{Expr::Op::Var};
            in.var = intern(name);
            emit(in, 1);
            return;
        }
        if (c == '\0') throw SyntaxError("unexpected end of input", pos_);
        throw SyntaxError(std::string("unexpected token '") + c + "'", pos_);
    }

    void parse_number(std::size_t at) {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc()) throw SyntaxError("malformed number", at);
        pos_ += static_cast<std::size_t>(ptr - begin);
        Expr::Instr in{Expr::Op::Const};
        in.num = value;
        emit(in, 1);
    }

    int intern(const std::string& name) {
        int idx = out_->var_index(name);
        if (idx >= 0) return idx;
        out_->vars_.push_back(name);
        return static_cast<int>(out_->vars_.size() - 1);
    }
};

inline Expr Expr::parse(std::string_view src) { return ExprParser(src).parse(); }

inline std::string Expr::render() const {
    // precedence levels: 0 sum, 1 term, 2 unary, 3 power, 4 atom
    struct Frag {
        std::string text;
        int prec;
    };
    std::vector<Frag> stack;
    auto wrap = [](const Frag& f, int need) {
        return f.prec < need ? "(" + f.text + ")" : f.text;
    };
    for (const Instr& in : tape_) {
        switch (in.op) {
            case Op::Const: {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.17g", in.num);
                std::string text(buf);
                stack.push_back({text, in.num < 0 ? 2 : 4});
                break;
            }
            case Op::Var:
                stack.push_back({vars_[static_cast<std::size_t>(in.var)], 4});
                break;
            case Op::Neg: {
                Frag a = stack.back();
                stack.pop_back();
                stack.push_back({"-" + wrap(a, 3), 2});
                break;
            }
            case Op::Add:
            case Op::Sub: {
                Frag b = stack.back();
                stack.pop_back();
                Frag a = stack.back();
                stack.pop_back();
                const char* op = in.op == Op::Add ? " + " : " - ";
                stack.push_back({wrap(a, 0) + op + wrap(b, 1), 0});
                break;
            }
            case Op::Mul:
            case Op::Div: {
                Frag b = stack.back();
                stack.pop_back();
                Frag a = stack.back();
                stack.pop_back();
                const char* op = in.op == Op::Mul ? "*" : "/";
                stack.push_back({wrap(a, 1) + op + wrap(b, 2), 1});
                break;
            }
            case Op::Pow: {
                Frag b = stack.back();
                stack.pop_back();
                Frag a = stack.back();
                stack.pop_back();
                stack.push_back({wrap(a, 4) + "^" + wrap(b, 3), 3});
                break;
            }
            case Op::PowInt: {
                Frag a = stack.back();
                stack.pop_back();
                stack.push_back({wrap(a, 4) + "^" + std::to_string(in.ipow), 3});
                break;
            }
            case Op::Call: {
                Frag a = stack.back();
                stack.pop_back();
                stack.push_back({std::string(func_name(in.fn)) + "(" + a.text + ")", 4});
                break;
            }
        }
    }
    return stack.back().text;
}

} // namespace compactode
