#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mforge/errors.hpp"
#include "mforge/rational.hpp"

namespace mforge {

// Numeric leaf: exact rational where possible, double otherwise.
struct Number {
    bool exact = true;
    Rational rat;
    double dbl = 0.0;

    static Number of(const Rational& r) { return Number{true, r, r.to_double()}; }
    static Number of(double v) { return Number{false, Rational(0), v}; }

    double value() const { return exact ? rat.to_double() : dbl; }
    bool is_zero() const { return exact ? rat.is_zero() : dbl == 0.0; }
    bool is_one() const { return exact ? rat.is_one() : dbl == 1.0; }
    bool is_integer() const;
    long long as_integer() const;  // valid only when is_integer()
};

enum class FuncId { Sin, Cos, Tan, Exp, Ln, Sqrt, Abs, Sign, Tanh, Atan, Atanh };

const char* func_name(FuncId f);
std::optional<FuncId> func_by_name(std::string_view name);

enum class Kind { Number, Symbol, Func, Power, Product, Sum };

// Immutable expression tree with shared structure. All construction goes
// through the smart constructors below, which normalize on the fly:
// n-ary sums/products are flattened and canonically sorted, numeric
// subterms are folded, like terms and like factors are collected, and a
// small set of safe power rewrites is applied. Equal expressions therefore
// compare equal structurally.
class Expr {
public:
    Expr() : Expr(num(0)) {}

    static Expr num(long long n);
    static Expr num(long long n, long long d);
    static Expr num(int n) { return num(static_cast<long long>(n)); }
    static Expr num(double v);
    static Expr num(const Number& n);
    static Expr sym(std::string name);
    static Expr sum(std::vector<Expr> terms);
    static Expr prod(std::vector<Expr> factors);
    static Expr pow(Expr base, Expr exponent);
    static Expr apply(FuncId f, Expr arg);

    Kind kind() const;
    const Number& number() const;       // Kind::Number
    const std::string& name() const;    // Kind::Symbol
    FuncId func() const;                // Kind::Func
    const std::vector<Expr>& kids() const;  // children (Power: [base, exponent])
    const Expr& base() const;           // Kind::Power
    const Expr& exponent() const;       // Kind::Power
    const Expr& arg() const;            // Kind::Func

    bool is_number() const { return kind() == Kind::Number; }
    bool is_zero() const { return is_number() && number().is_zero(); }
    bool is_one() const { return is_number() && number().is_one(); }
    bool is_symbol(std::string_view n) const {
        return kind() == Kind::Symbol && name() == n;
    }

    // Total order consistent with structural equality (0 iff equal).
    static int compare(const Expr& a, const Expr& b);

    friend bool operator==(const Expr& a, const Expr& b) {
        return compare(a, b) == 0;
    }
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

    friend Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
    friend Expr operator-(const Expr& a, const Expr& b) {
        return sum({a, prod({num(-1), b})});
    }
    friend Expr operator-(const Expr& a) { return prod({num(-1), a}); }
    friend Expr operator*(const Expr& a, const Expr& b) { return prod({a, b}); }
    friend Expr operator/(const Expr& a, const Expr& b) {
        return prod({a, pow(b, num(-1))});
    }

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}
    static Expr make(Node n);
    static Expr raw_product(std::vector<Expr> factors);
    std::shared_ptr<const Node> p_;
};

inline Expr sin(const Expr& e) { return Expr::apply(FuncId::Sin, e); }
inline Expr cos(const Expr& e) { return Expr::apply(FuncId::Cos, e); }
inline Expr tan(const Expr& e) { return Expr::apply(FuncId::Tan, e); }
inline Expr exp(const Expr& e) { return Expr::apply(FuncId::Exp, e); }
inline Expr ln(const Expr& e) { return Expr::apply(FuncId::Ln, e); }
inline Expr sqrt(const Expr& e) { return Expr::apply(FuncId::Sqrt, e); }
inline Expr abs(const Expr& e) { return Expr::apply(FuncId::Abs, e); }
inline Expr sign(const Expr& e) { return Expr::apply(FuncId::Sign, e); }
inline Expr tanh(const Expr& e) { return Expr::apply(FuncId::Tanh, e); }
inline Expr atan(const Expr& e) { return Expr::apply(FuncId::Atan, e); }
inline Expr atanh(const Expr& e) { return Expr::apply(FuncId::Atanh, e); }

// Parse source text into a normalized expression. Grammar: + - * / ^ with
// standard precedence, ^ right-associative, unary minus, parentheses,
// decimal/scientific literals, identifiers, and calls of the known
// function set. Throws ParseError with line/column on failure.
Expr parse(std::string_view source);

// Render to text that parses back to a structurally equal expression.
std::string render(const Expr& e);

// Free symbols (variables and parameters are not distinguished here; the
// binding context decides which is which).
std::set<std::string> free_symbols(const Expr& e);

// Simultaneous substitution of symbols by expressions; renormalizes.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);
inline Expr substitute(const Expr& e, const std::string& name,
                       const Expr& repl) {
    return substitute(e, std::map<std::string, Expr>{{name, repl}});
}

// Partial derivative with respect to `var`; every other symbol is treated
// as a constant. abs and sign differentiate via d|u|/dx = sign(u) u',
// d sign(u)/dx = 0.
Expr differentiate(const Expr& e, const std::string& var);

using EvalPoint = std::map<std::string, double>;
using Params = std::map<std::string, double>;

// Numeric evaluation. Symbols are looked up in `point` first, then in
// `params`; a miss throws EvalError::Unbound. |denominator| < eps_sing (for
// negative powers) and tan poles throw Singular; ln/sqrt/atanh domain
// violations and fractional powers of negatives throw OutOfDomain.
double evaluate(const Expr& e, const EvalPoint& point,
                const Params& params = {}, double eps_sing = 1e-9);

// Distribute products/integer powers over sums with respect to sums that
// involve `var`; used by the antiderivative table and polynomial
// detection. Expansion bails out (returns input) past `term_budget` terms.
Expr expand_in(const Expr& e, const std::string& var, int term_budget = 64);

// If e is affine in var (e = A*var + B with A, B free of var), return
// {A, B}; otherwise nullopt. Detection is structural (via differentiate).
std::optional<std::pair<Expr, Expr>> linear_in(const Expr& e,
                                               const std::string& var);

}  // namespace mforge
