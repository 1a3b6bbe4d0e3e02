#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace datamkt {

/// Syntax error with the byte offset of the offending token and a short
/// description of what the parser expected there.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t offset, std::string expected)
        : std::runtime_error(msg), offset(offset), expected(std::move(expected)) {}
    std::size_t offset;
    std::string expected;
};

/// Evaluation-domain error (division by zero, log/sqrt of a negative number,
/// pow outside its domain). `where` holds the offending sub-expression.
struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg, std::string where = {})
        : std::runtime_error(msg), where(std::move(where)) {}
    std::string where;
};

/// Ordered list of variable names an expression may reference.
class ExprSignature {
public:
    ExprSignature() = default;
    ExprSignature(std::initializer_list<std::string> names);
    explicit ExprSignature(std::vector<std::string> names);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    /// Index of `name`, or -1 when absent.
    int index_of(std::string_view name) const;

private:
    std::vector<std::string> names_;
};

namespace detail {
struct ExprNode;
}

/// Flattened postfix program for fast repeated evaluation. Produces the exact
/// same operation sequence (and therefore the same rounding) as Expr::eval.
class CompiledExpr {
public:
    CompiledExpr() = default;
    double eval(std::span<const double> values) const;
    double operator()(double a) const { return eval({&a, 1}); }
    double operator()(double a, double b) const {
        const double v[2] = {a, b};
        return eval({v, 2});
    }

private:
    friend class Expr;
    enum class Op : std::uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sqrt };
    struct Ins {
        Op op;
        std::uint32_t index; // constant slot or variable slot
    };
    std::vector<Ins> program_;
    std::vector<double> constants_;
    std::size_t stack_size_ = 0;
};

/// Immutable parsed arithmetic expression over a fixed signature.
/// Supports +, -, *, /, ^ (right-associative), unary minus, parentheses and
/// the functions exp, log, sqrt. Values are read positionally in signature
/// order. Expr values are safe to share across threads.
class Expr {
public:
    static Expr parse(std::string_view source, ExprSignature signature);

    double eval(std::span<const double> values) const;
    double eval(std::initializer_list<double> values) const {
        return eval(std::span<const double>(values.begin(), values.size()));
    }
    double eval_named(const std::map<std::string, double>& bindings) const;

    /// Symbolic partial derivative with respect to `var`. Literal arithmetic
    /// is constant-folded; no other simplification is attempted.
    Expr differentiate(std::string_view var) const;

    std::string to_string() const;
    const ExprSignature& signature() const { return *signature_; }
    CompiledExpr compile() const;

private:
    Expr(std::shared_ptr<const detail::ExprNode> root, std::shared_ptr<const ExprSignature> sig)
        : root_(std::move(root)), signature_(std::move(sig)) {}
    std::shared_ptr<const detail::ExprNode> root_;
    std::shared_ptr<const ExprSignature> signature_;
};

} // namespace datamkt
