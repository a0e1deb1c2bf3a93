#include "mforge/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mforge {

bool Number::is_integer() const {
    if (exact) return rat.is_integer();
    return std::nearbyint(dbl) == dbl && std::fabs(dbl) < 9.007199254740992e15;
}

long long Number::as_integer() const {
    return exact ? rat.num() : static_cast<long long>(dbl);
}

namespace {

Number num_add(const Number& a, const Number& b) {
    if (a.exact && b.exact) {
        if (auto r = Rational::add(a.rat, b.rat)) return Number::of(*r);
    }
    return Number::of(a.value() + b.value());
}

Number num_mul(const Number& a, const Number& b) {
    if (a.exact && b.exact) {
        if (auto r = Rational::mul(a.rat, b.rat)) return Number::of(*r);
    }
    return Number::of(a.value() * b.value());
}

}  // namespace

const char* func_name(FuncId f) {
    switch (f) {
        case FuncId::Sin: return "sin";
        case FuncId::Cos: return "cos";
        case FuncId::Tan: return "tan";
        case FuncId::Exp: return "exp";
        case FuncId::Ln: return "ln";
        case FuncId::Sqrt: return "sqrt";
        case FuncId::Abs: return "abs";
        case FuncId::Sign: return "sign";
        case FuncId::Tanh: return "tanh";
        case FuncId::Atan: return "atan";
        case FuncId::Atanh: return "atanh";
    }
    return "?";
}

static const FuncId kAllFuncs[] = {
    FuncId::Sin,  FuncId::Cos,  FuncId::Tan,  FuncId::Exp,
    FuncId::Ln,   FuncId::Sqrt, FuncId::Abs,  FuncId::Sign,
    FuncId::Tanh, FuncId::Atan, FuncId::Atanh};

std::optional<FuncId> func_by_name(std::string_view name) {
    for (FuncId f : kAllFuncs)
        if (name == func_name(f)) return f;
    return std::nullopt;
}

struct Expr::Node {
    Kind kind;
    Number number{};        // Kind::Number
    std::string name;       // Kind::Symbol
    FuncId func{};          // Kind::Func
    std::vector<Expr> kids; // Func: [arg]; Power: [base, exp]; Sum/Product: terms
};

Kind Expr::kind() const { return p_->kind; }
const Number& Expr::number() const { return p_->number; }
const std::string& Expr::name() const { return p_->name; }
FuncId Expr::func() const { return p_->func; }
const std::vector<Expr>& Expr::kids() const { return p_->kids; }
const Expr& Expr::base() const { return p_->kids[0]; }
const Expr& Expr::exponent() const { return p_->kids[1]; }
const Expr& Expr::arg() const { return p_->kids[0]; }

Expr Expr::make(Node n) {
    return Expr(std::make_shared<const Node>(std::move(n)));
}

// Rebuild a product from already-canonical factors without renormalizing.
Expr Expr::raw_product(std::vector<Expr> factors) {
    if (factors.size() == 1) return factors[0];
    Node node;
    node.kind = Kind::Product;
    node.kids = std::move(factors);
    return make(std::move(node));
}

Expr Expr::num(long long n) { return num(Number::of(Rational(n))); }
Expr Expr::num(long long n, long long d) { return num(Number::of(Rational(n, d))); }
Expr Expr::num(double v) { return num(Number::of(v)); }

Expr Expr::num(const Number& n) {
    Node node;
    node.kind = Kind::Number;
    node.number = n;
    return make(std::move(node));
}

Expr Expr::sym(std::string name) {
    Node node;
    node.kind = Kind::Symbol;
    node.name = std::move(name);
    return make(std::move(node));
}

int Expr::compare(const Expr& a, const Expr& b) {
    if (a.p_ == b.p_) return 0;
    int ka = static_cast<int>(a.kind());
    int kb = static_cast<int>(b.kind());
    if (ka != kb) return ka < kb ? -1 : 1;
    switch (a.kind()) {
        case Kind::Number: {
            // Numbers compare by value: an exact rational and a double with
            // the same value are the same constant.
            const Number& x = a.number();
            const Number& y = b.number();
            if (x.exact && y.exact) return Rational::compare(x.rat, y.rat);
            double vx = x.value(), vy = y.value();
            if (vx < vy) return -1;
            if (vx > vy) return 1;
            return 0;
        }
        case Kind::Symbol: {
            int c = a.name().compare(b.name());
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        case Kind::Func: {
            if (a.func() != b.func())
                return static_cast<int>(a.func()) < static_cast<int>(b.func()) ? -1 : 1;
            return compare(a.arg(), b.arg());
        }
        case Kind::Power: {
            int c = compare(a.base(), b.base());
            if (c != 0) return c;
            return compare(a.exponent(), b.exponent());
        }
        case Kind::Sum:
        case Kind::Product: {
            const auto& xa = a.kids();
            const auto& xb = b.kids();
            size_t n = std::min(xa.size(), xb.size());
            for (size_t i = 0; i < n; ++i) {
                int c = compare(xa[i], xb[i]);
                if (c != 0) return c;
            }
            if (xa.size() != xb.size()) return xa.size() < xb.size() ? -1 : 1;
            return 0;
        }
    }
    return 0;
}

Expr Expr::sum(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    flat.reserve(terms.size());
    // A numeric multiple of a sum splices in termwise so that negated sums
    // cancel against flattened terms (a - a must collapse to 0, not linger
    // as an opaque (-1)*sum term that like-term grouping cannot reach).
    auto push_term = [&flat](const Expr& t) {
        if (t.kind() == Kind::Product && t.kids().size() == 2 &&
            t.kids().front().is_number() && t.kids().back().kind() == Kind::Sum) {
            const Expr& c = t.kids().front();
            for (const auto& k : t.kids().back().kids())
                flat.push_back(prod({c, k}));
            return;
        }
        flat.push_back(t);
    };
    for (auto& t : terms) {
        if (t.kind() == Kind::Sum)
            for (const auto& k : t.kids()) push_term(k);
        else
            push_term(t);
    }

    Number constant = Number::of(Rational(0));
    // Like terms share a coefficient: each non-numeric term splits as
    // (numeric coefficient, rest); rests are merged by structural equality.
    std::vector<std::pair<Expr, Number>> groups;
    for (auto& t : flat) {
        if (t.is_number()) {
            constant = num_add(constant, t.number());
            continue;
        }
        Expr rest = t;
        Number coeff = Number::of(Rational(1));
        if (t.kind() == Kind::Product && t.kids().front().is_number()) {
            coeff = t.kids().front().number();
            std::vector<Expr> others(t.kids().begin() + 1, t.kids().end());
            rest = raw_product(std::move(others));
        }
        bool found = false;
        for (auto& g : groups) {
            if (compare(g.first, rest) == 0) {
                g.second = num_add(g.second, coeff);
                found = true;
                break;
            }
        }
        if (!found) groups.emplace_back(std::move(rest), coeff);
    }

    std::vector<Expr> out;
    for (auto& g : groups) {
        if (g.second.is_zero()) continue;
        if (g.second.is_one())
            out.push_back(g.first);
        else
            out.push_back(prod({num(g.second), g.first}));
    }
    if (!constant.is_zero() || out.empty()) out.push_back(num(constant));
    std::sort(out.begin(), out.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    if (out.size() == 1) return out[0];

    Node node;
    node.kind = Kind::Sum;
    node.kids = std::move(out);
    return make(std::move(node));
}

Expr Expr::prod(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    flat.reserve(factors.size());
    for (auto& f : factors) {
        if (f.kind() == Kind::Product)
            for (const auto& k : f.kids()) flat.push_back(k);
        else
            flat.push_back(std::move(f));
    }

    Number constant = Number::of(Rational(1));
    // Like factors merge by base with exponents accumulated additively.
    std::vector<std::pair<Expr, Expr>> groups;  // base -> exponent
    for (auto& f : flat) {
        if (f.is_number()) {
            constant = num_mul(constant, f.number());
            continue;
        }
        Expr b = f;
        Expr e = num(1);
        if (f.kind() == Kind::Power) {
            b = f.base();
            e = f.exponent();
        }
        bool found = false;
        for (auto& g : groups) {
            if (compare(g.first, b) == 0) {
                g.second = sum({g.second, e});
                found = true;
                break;
            }
        }
        if (!found) groups.emplace_back(std::move(b), std::move(e));
    }
    if (constant.is_zero()) return num(0);

    std::vector<Expr> out;
    bool changed = false;
    for (auto& g : groups) {
        Expr p = pow(g.first, g.second);
        if (p.is_number()) {
            constant = num_mul(constant, p.number());
            changed = true;
            continue;
        }
        if (p.kind() == Kind::Power && compare(p.base(), g.first) == 0) {
            out.push_back(p);
            continue;
        }
        if (p.kind() != Kind::Power && g.second.is_one() &&
            compare(p, g.first) == 0) {
            out.push_back(p);
            continue;
        }
        // pow() rewrote the factor (sqrt collapse, power-of-power, numeric
        // fold, distribution over a product); rebuilt bases may merge with
        // other groups, so run the whole collection again.
        out.push_back(p);
        changed = true;
    }

    if (changed) {
        out.push_back(num(constant));
        return prod(std::move(out));
    }

    if (out.empty()) return num(constant);
    std::sort(out.begin(), out.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    if (!constant.is_one()) {
        out.insert(out.begin(), num(constant));
    } else if (out.size() == 1) {
        return out[0];
    }

    Node node;
    node.kind = Kind::Product;
    node.kids = std::move(out);
    return make(std::move(node));
}

Expr Expr::pow(Expr b, Expr e) {
    if (e.is_zero()) return num(1);
    if (e.is_one()) return b;

    if (b.is_number() && e.is_number()) {
        const Number& nb = b.number();
        const Number& ne = e.number();
        if (nb.is_one()) return num(1);
        if (nb.is_zero()) {
            if (ne.value() > 0) return num(0);
        } else {
            if (nb.exact && ne.exact && ne.rat.is_integer()) {
                if (auto r = Rational::pow(nb.rat, ne.rat.num()))
                    return num(Number::of(*r));
            }
            double base = nb.value(), expo = ne.value();
            if (base > 0 || (base < 0 && ne.is_integer())) {
                double r = std::pow(base, expo);
                if (std::isfinite(r)) return num(r);
            }
        }
        // 0^negative and fractional powers of negatives stay symbolic and
        // fault at evaluation time.
        Node node;
        node.kind = Kind::Power;
        node.kids = {std::move(b), std::move(e)};
        return make(std::move(node));
    }

    if (b.is_one()) return num(1);
    if (b.is_zero() && e.kind() != Kind::Number) {
        Node node;  // 0^f(x): keep, sign of f unknown
        node.kind = Kind::Power;
        node.kids = {std::move(b), std::move(e)};
        return make(std::move(node));
    }

    bool int_exp = e.is_number() && e.number().is_integer();
    if (int_exp && b.kind() == Kind::Power) {
        // (u^a)^n = u^(a n) for integer n
        return pow(b.base(), prod({b.exponent(), e}));
    }
    if (int_exp && b.kind() == Kind::Func && b.func() == FuncId::Sqrt) {
        long long m = e.number().as_integer();
        if (m % 2 == 0) return pow(b.arg(), num(m / 2));
    }
    if (int_exp && b.kind() == Kind::Product) {
        std::vector<Expr> fs;
        fs.reserve(b.kids().size());
        for (const auto& f : b.kids()) fs.push_back(pow(f, e));
        return prod(std::move(fs));
    }

    Node node;
    node.kind = Kind::Power;
    node.kids = {std::move(b), std::move(e)};
    return make(std::move(node));
}

namespace {

bool perfect_sqrt(long long v, long long& root) {
    if (v < 0) return false;
    long long r = static_cast<long long>(std::llround(std::sqrt(static_cast<double>(v))));
    for (long long c = std::max(0LL, r - 1); c <= r + 1; ++c)
        if (c * c == v) {
            root = c;
            return true;
        }
    return false;
}

}  // namespace

Expr Expr::apply(FuncId f, Expr arg) {
    if (arg.is_number()) {
        const Number& n = arg.number();
        switch (f) {
            case FuncId::Sin:
            case FuncId::Tan:
            case FuncId::Tanh:
            case FuncId::Atan:
            case FuncId::Atanh:
                if (n.is_zero()) return num(0);
                break;
            case FuncId::Cos:
            case FuncId::Exp:
                if (n.is_zero()) return num(1);
                break;
            case FuncId::Ln:
                if (n.is_one()) return num(0);
                break;
            case FuncId::Sqrt:
                if (n.exact && !n.rat.negative()) {
                    long long rn = 0, rd = 0;
                    if (perfect_sqrt(n.rat.num(), rn) && perfect_sqrt(n.rat.den(), rd))
                        return num(Number::of(Rational(rn, rd)));
                } else if (!n.exact && n.dbl >= 0) {
                    return num(std::sqrt(n.dbl));
                }
                break;
            case FuncId::Abs:
                if (n.exact) return num(Number::of(n.rat.negative() ? n.rat.negated() : n.rat));
                return num(std::fabs(n.dbl));
            case FuncId::Sign: {
                double v = n.value();
                return num(v > 0 ? 1 : (v < 0 ? -1 : 0));
            }
        }
    }
    Node node;
    node.kind = Kind::Func;
    node.func = f;
    node.kids = {std::move(arg)};
    return make(std::move(node));
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// Effective precedence for parenthesization decisions. Negative constants
// bind like unary minus; exact fractions render with '/' and bind like a
// product.
int eff_prec(const Expr& e) {
    switch (e.kind()) {
        case Kind::Sum: return 10;
        case Kind::Product: {
            if (e.kids().front().is_number() && e.kids().front().number().value() < 0)
                return 5;
            return 20;
        }
        case Kind::Power: return 40;
        case Kind::Number: {
            const Number& n = e.number();
            if (n.value() < 0) return 5;
            if (n.exact && !n.rat.is_integer()) return 20;
            return 100;
        }
        default: return 100;
    }
}

std::string render_number(const Number& n) {
    if (n.exact) return n.rat.str();
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", n.dbl);
    return buf;
}

std::string render_impl(const Expr& e);

std::string wrapped(const Expr& e, int need) {
    std::string s = render_impl(e);
    if (eff_prec(e) < need) return "(" + s + ")";
    return s;
}

std::string render_product(const Expr& e) {
    // Split into sign, leading rational coefficient, numerator factors and
    // denominator factors (negative numeric exponents render as division).
    std::string out;
    std::vector<std::string> nums, dens;
    bool negative = false;
    size_t start = 0;
    const auto& kids = e.kids();
    if (kids.front().is_number()) {
        start = 1;
        const Number& c = kids.front().number();
        double v = c.value();
        if (v < 0) negative = true;
        if (c.exact) {
            Rational r = c.rat.negative() ? c.rat.negated() : c.rat;
            if (r.num() != 1) nums.push_back(std::to_string(r.num()));
            if (r.den() != 1) dens.push_back(std::to_string(r.den()));
        } else {
            double a = std::fabs(v);
            if (a != 1.0) nums.push_back(render_number(Number::of(a)));
        }
    }
    for (size_t i = start; i < kids.size(); ++i) {
        const Expr& f = kids[i];
        if (f.kind() == Kind::Power && f.exponent().is_number() &&
            f.exponent().number().value() < 0) {
            const Number& ex = f.exponent().number();
            Expr inv_exp = Expr::num(ex.exact ? Number::of(ex.rat.negated())
                                              : Number::of(-ex.dbl));
            Expr inv = inv_exp.is_one() ? f.base() : Expr::pow(f.base(), inv_exp);
            dens.push_back(wrapped(inv, 21));
        } else {
            nums.push_back(wrapped(f, 20));
        }
    }
    if (nums.empty()) nums.push_back("1");
    for (size_t i = 0; i < nums.size(); ++i) {
        if (i) out += "*";
        out += nums[i];
    }
    for (const auto& d : dens) out += "/" + d;
    if (negative) return "-" + out;
    return out;
}

std::string render_sum(const Expr& e) {
    std::string out;
    bool first = true;
    for (const auto& t : e.kids()) {
        bool neg = false;
        Expr body = t;
        if (t.is_number() && t.number().value() < 0) {
            neg = true;
            const Number& n = t.number();
            body = Expr::num(n.exact ? Number::of(n.rat.negated()) : Number::of(-n.dbl));
        } else if (t.kind() == Kind::Product && t.kids().front().is_number() &&
                   t.kids().front().number().value() < 0) {
            neg = true;
            body = Expr::prod({Expr::num(-1), t});
        }
        // A subtracted body must bind tighter than the minus sign.
        std::string s = neg ? wrapped(body, 20) : render_impl(body);
        if (first) {
            out += neg ? "-" + s : s;
            first = false;
        } else {
            out += neg ? " - " : " + ";
            out += s;
        }
    }
    return out;
}

std::string render_impl(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number:
            return render_number(e.number());
        case Kind::Symbol:
            return e.name();
        case Kind::Func:
            return std::string(func_name(e.func())) + "(" + render_impl(e.arg()) + ")";
        case Kind::Power: {
            std::string b = wrapped(e.base(), 41);
            const Expr& ex = e.exponent();
            std::string s;
            if (ex.is_number() && ex.number().value() < 0 && ex.number().is_integer()) {
                s = render_number(ex.number());  // x^-2 reparses unambiguously
            } else {
                s = wrapped(ex, 41);
            }
            return b + "^" + s;
        }
        case Kind::Product:
            return render_product(e);
        case Kind::Sum:
            return render_sum(e);
    }
    return "?";
}

}  // namespace

std::string render(const Expr& e) { return render_impl(e); }

// ---------------------------------------------------------------------------
// Structure queries and rewriting

namespace {

void collect_symbols(const Expr& e, std::set<std::string>& out) {
    switch (e.kind()) {
        case Kind::Number: return;
        case Kind::Symbol: out.insert(e.name()); return;
        default:
            for (const auto& k : e.kids()) collect_symbols(k, out);
    }
}

}  // namespace

std::set<std::string> free_symbols(const Expr& e) {
    std::set<std::string> out;
    collect_symbols(e, out);
    return out;
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
    switch (e.kind()) {
        case Kind::Number: return e;
        case Kind::Symbol: {
            auto it = bindings.find(e.name());
            return it == bindings.end() ? e : it->second;
        }
        case Kind::Func: return Expr::apply(e.func(), substitute(e.arg(), bindings));
        case Kind::Power:
            return Expr::pow(substitute(e.base(), bindings),
                             substitute(e.exponent(), bindings));
        case Kind::Sum: {
            std::vector<Expr> kids;
            kids.reserve(e.kids().size());
            for (const auto& k : e.kids()) kids.push_back(substitute(k, bindings));
            return Expr::sum(std::move(kids));
        }
        case Kind::Product: {
            std::vector<Expr> kids;
            kids.reserve(e.kids().size());
            for (const auto& k : e.kids()) kids.push_back(substitute(k, bindings));
            return Expr::prod(std::move(kids));
        }
    }
    return e;
}

Expr differentiate(const Expr& e, const std::string& var) {
    switch (e.kind()) {
        case Kind::Number:
            return Expr::num(0);
        case Kind::Symbol:
            return e.name() == var ? Expr::num(1) : Expr::num(0);
        case Kind::Sum: {
            std::vector<Expr> kids;
            kids.reserve(e.kids().size());
            for (const auto& k : e.kids()) kids.push_back(differentiate(k, var));
            return Expr::sum(std::move(kids));
        }
        case Kind::Product: {
            std::vector<Expr> terms;
            const auto& kids = e.kids();
            for (size_t i = 0; i < kids.size(); ++i) {
                std::vector<Expr> fs;
                fs.reserve(kids.size());
                fs.push_back(differentiate(kids[i], var));
                for (size_t j = 0; j < kids.size(); ++j)
                    if (j != i) fs.push_back(kids[j]);
                terms.push_back(Expr::prod(std::move(fs)));
            }
            return Expr::sum(std::move(terms));
        }
        case Kind::Power: {
            const Expr& u = e.base();
            const Expr& a = e.exponent();
            Expr du = differentiate(u, var);
            Expr da = differentiate(a, var);
            if (da.is_zero()) {
                // a u^(a-1) u'
                return Expr::prod(
                    {a, Expr::pow(u, Expr::sum({a, Expr::num(-1)})), du});
            }
            // u^a (a' ln u + a u' / u)
            Expr inner = Expr::sum(
                {Expr::prod({da, ln(u)}),
                 Expr::prod({a, du, Expr::pow(u, Expr::num(-1))})});
            return Expr::prod({e, inner});
        }
        case Kind::Func: {
            const Expr& u = e.arg();
            Expr du = differentiate(u, var);
            Expr outer = Expr::num(0);
            switch (e.func()) {
                case FuncId::Sin: outer = cos(u); break;
                case FuncId::Cos: outer = -sin(u); break;
                case FuncId::Tan:
                    outer = Expr::sum({Expr::num(1), Expr::pow(tan(u), Expr::num(2))});
                    break;
                case FuncId::Exp: outer = e; break;
                case FuncId::Ln: outer = Expr::pow(u, Expr::num(-1)); break;
                case FuncId::Sqrt:
                    outer = Expr::prod(
                        {Expr::num(1, 2), Expr::pow(u, Expr::num(-1, 2))});
                    break;
                case FuncId::Abs: outer = sign(u); break;
                case FuncId::Sign: outer = Expr::num(0); break;
                case FuncId::Tanh:
                    outer = Expr::sum({Expr::num(1),
                                       Expr::prod({Expr::num(-1),
                                                   Expr::pow(tanh(u), Expr::num(2))})});
                    break;
                case FuncId::Atan:
                    outer = Expr::pow(
                        Expr::sum({Expr::num(1), Expr::pow(u, Expr::num(2))}),
                        Expr::num(-1));
                    break;
                case FuncId::Atanh:
                    outer = Expr::pow(
                        Expr::sum({Expr::num(1),
                                   Expr::prod({Expr::num(-1), Expr::pow(u, Expr::num(2))})}),
                        Expr::num(-1));
                    break;
            }
            return Expr::prod({outer, du});
        }
    }
    return Expr::num(0);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void throw_singular(const Expr& e, const std::string& what) {
    throw EvalError(EvalError::Kind::Singular, what + ": " + render(e), render(e));
}

[[noreturn]] void throw_domain(const Expr& e, const std::string& what) {
    throw EvalError(EvalError::Kind::OutOfDomain, what + ": " + render(e), render(e));
}

double eval_impl(const Expr& e, const EvalPoint& point, const Params& params,
                 double eps) {
    switch (e.kind()) {
        case Kind::Number:
            return e.number().value();
        case Kind::Symbol: {
            if (auto it = point.find(e.name()); it != point.end()) return it->second;
            if (auto it = params.find(e.name()); it != params.end()) return it->second;
            throw EvalError(EvalError::Kind::Unbound,
                            "unbound symbol '" + e.name() + "'", e.name());
        }
        case Kind::Sum: {
            double acc = 0;
            for (const auto& k : e.kids()) acc += eval_impl(k, point, params, eps);
            return acc;
        }
        case Kind::Product: {
            double acc = 1;
            for (const auto& k : e.kids()) acc *= eval_impl(k, point, params, eps);
            if (!std::isfinite(acc)) throw_singular(e, "non-finite product");
            return acc;
        }
        case Kind::Power: {
            double ev = eval_impl(e.exponent(), point, params, eps);
            double bv = eval_impl(e.base(), point, params, eps);
            if (ev < 0 && std::fabs(bv) < eps)
                throw_singular(e, "division by near-zero base");
            if (bv < 0) {
                double r = std::nearbyint(ev);
                if (std::fabs(ev - r) > 1e-12)
                    throw_domain(e, "fractional power of negative base");
                ev = r;
            }
            double r = std::pow(bv, ev);
            if (!std::isfinite(r)) throw_singular(e, "non-finite power");
            return r;
        }
        case Kind::Func: {
            double u = eval_impl(e.arg(), point, params, eps);
            double r = 0;
            switch (e.func()) {
                case FuncId::Sin: r = std::sin(u); break;
                case FuncId::Cos: r = std::cos(u); break;
                case FuncId::Tan: {
                    if (std::fabs(std::cos(u)) < eps)
                        throw_singular(e, "tan near pole");
                    r = std::tan(u);
                    break;
                }
                case FuncId::Exp: r = std::exp(u); break;
                case FuncId::Ln:
                    if (u <= 0) throw_domain(e, "ln of non-positive value");
                    r = std::log(u);
                    break;
                case FuncId::Sqrt:
                    if (u < 0) throw_domain(e, "sqrt of negative value");
                    r = std::sqrt(u);
                    break;
                case FuncId::Abs: r = std::fabs(u); break;
                case FuncId::Sign: r = (u > 0) - (u < 0); break;
                case FuncId::Tanh: r = std::tanh(u); break;
                case FuncId::Atan: r = std::atan(u); break;
                case FuncId::Atanh:
                    if (std::fabs(u) >= 1)
                        throw_domain(e, "atanh outside (-1, 1)");
                    r = std::atanh(u);
                    break;
            }
            if (!std::isfinite(r)) throw_singular(e, "non-finite function value");
            return r;
        }
    }
    return 0;
}

}  // namespace

double evaluate(const Expr& e, const EvalPoint& point, const Params& params,
                double eps_sing) {
    return eval_impl(e, point, params, eps_sing);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
    enum Type { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } type;
    std::string text;
    Number value{};
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> toks;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.col = col_;
            if (pos_ >= src_.size()) {
                t.type = Token::End;
                toks.push_back(t);
                return toks;
            }
            char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                t.type = Token::Num;
                t.value = lex_number(t.text);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.type = Token::Ident;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                        src_[pos_] == '_')) {
                    t.text += src_[pos_];
                    step();
                }
            } else {
                switch (c) {
                    case '+': t.type = Token::Plus; break;
                    case '-': t.type = Token::Minus; break;
                    case '*': t.type = Token::Star; break;
                    case '/': t.type = Token::Slash; break;
                    case '^': t.type = Token::Caret; break;
                    case '(': t.type = Token::LParen; break;
                    case ')': t.type = Token::RParen; break;
                    default:
                        throw ParseError(std::string("unexpected character '") + c + "'",
                                         line_, col_);
                }
                t.text = c;
                step();
            }
            toks.push_back(std::move(t));
        }
    }

private:
    void step() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_])))
            step();
    }

    Number lex_number(std::string& text) {
        size_t begin = pos_;
        long long frac_digits = 0;
        bool has_dot = false, has_exp = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            step();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            has_dot = true;
            step();
            size_t fs = pos_;
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_])))
                step();
            frac_digits = static_cast<long long>(pos_ - fs);
        }
        long long exp10 = 0;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t save = pos_;
            int save_line = line_, save_col = col_;
            step();
            bool neg = false;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
                neg = src_[pos_] == '-';
                step();
            }
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                has_exp = true;
                while (pos_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    exp10 = exp10 * 10 + (src_[pos_] - '0');
                    if (exp10 > 4000) exp10 = 4000;
                    step();
                }
                if (neg) exp10 = -exp10;
            } else {
                // not an exponent; back off (identifier such as 2e = 2*e not
                // supported: treat as parse error later via stray ident)
                pos_ = save;
                line_ = save_line;
                col_ = save_col;
            }
        }
        text = std::string(src_.substr(begin, pos_ - begin));

        // Exact conversion when the mantissa fits and scaling stays in range.
        std::string digits;
        for (char c : text) {
            if (c == '.') continue;
            if (c == 'e' || c == 'E') break;
            digits += c;
        }
        if (digits.size() <= 18) {
            long long mant = std::strtoll(digits.c_str(), nullptr, 10);
            long long net = exp10 - frac_digits;
            if (net >= -18 && net <= 18) {
                long long scale = 1;
                bool ok = true;
                for (long long i = 0; i < std::llabs(net); ++i) {
                    if (scale > INT64_MAX / 10) {
                        ok = false;
                        break;
                    }
                    scale *= 10;
                }
                if (ok) {
                    if (net >= 0) {
                        __int128 v = static_cast<__int128>(mant) * scale;
                        if (v <= INT64_MAX)
                            return Number::of(Rational(static_cast<long long>(v)));
                    } else {
                        return Number::of(Rational(mant, scale));
                    }
                }
            }
        }
        (void)has_dot;
        (void)has_exp;
        return Number::of(std::strtod(text.c_str(), nullptr));
    }

    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Expr run() {
        Expr e = parse_expr(0);
        if (peek().type != Token::End)
            throw ParseError("unexpected trailing input '" + peek().text + "'",
                             peek().line, peek().col, {"end of input"});
        return e;
    }

private:
    const Token& peek() const { return toks_[i_]; }
    const Token& advance() { return toks_[i_++]; }

    static int prec_of(Token::Type t) {
        switch (t) {
            case Token::Plus:
            case Token::Minus: return 10;
            case Token::Star:
            case Token::Slash: return 20;
            case Token::Caret: return 40;
            default: return -1;
        }
    }

    Expr parse_expr(int min_prec) {
        Expr lhs = parse_primary();
        for (;;) {
            Token::Type t = peek().type;
            int prec = prec_of(t);
            if (prec < min_prec) break;
            advance();
            // ^ is right-associative; the rest associate left.
            Expr rhs = parse_expr(t == Token::Caret ? prec : prec + 1);
            switch (t) {
                case Token::Plus: lhs = lhs + rhs; break;
                case Token::Minus: lhs = lhs - rhs; break;
                case Token::Star: lhs = lhs * rhs; break;
                case Token::Slash: lhs = lhs / rhs; break;
                case Token::Caret: lhs = Expr::pow(lhs, rhs); break;
                default: break;
            }
        }
        return lhs;
    }

    Expr parse_primary() {
        const Token& t = peek();
        switch (t.type) {
            case Token::Minus:
                advance();
                // binds tighter than * but looser than ^: -x^2 = -(x^2)
                return -parse_expr(30);
            case Token::Num:
                advance();
                return Expr::num(t.value);
            case Token::LParen: {
                advance();
                Expr e = parse_expr(0);
                expect(Token::RParen, ")");
                return e;
            }
            case Token::Ident: {
                advance();
                if (peek().type == Token::LParen) {
                    auto fid = func_by_name(t.text);
                    if (!fid) {
                        std::vector<std::string> known;
                        for (FuncId f : kAllFuncs) known.push_back(func_name(f));
                        throw ParseError("unknown function '" + t.text + "'", t.line,
                                         t.col, known);
                    }
                    advance();
                    Expr arg = parse_expr(0);
                    expect(Token::RParen, ")");
                    return Expr::apply(*fid, arg);
                }
                return Expr::sym(t.text);
            }
            default:
                throw ParseError("unexpected token '" +
                                     (t.type == Token::End ? "end of input" : t.text) +
                                     "'",
                                 t.line, t.col,
                                 {"number", "identifier", "'('", "'-'"});
        }
    }

    void expect(Token::Type type, const std::string& what) {
        if (peek().type != type)
            throw ParseError("expected '" + what + "'", peek().line, peek().col,
                             {what});
        advance();
    }

    std::vector<Token> toks_;
    size_t i_ = 0;
};

}  // namespace

Expr parse(std::string_view source) {
    Lexer lex(source);
    Parser p(lex.run());
    return p.run();
}

// ---------------------------------------------------------------------------
// Expansion helpers

namespace {

bool depends_on(const Expr& e, const std::string& var) {
    switch (e.kind()) {
        case Kind::Number: return false;
        case Kind::Symbol: return e.name() == var;
        default:
            for (const auto& k : e.kids())
                if (depends_on(k, var)) return true;
            return false;
    }
}

// Represent e as a list of additive terms, multiplying out var-dependent
// sums. Returns false when the expansion exceeds the budget.
bool expand_terms(const Expr& e, const std::string& var, int budget,
                  std::vector<Expr>& out) {
    if (!depends_on(e, var)) {
        out.push_back(e);
        return true;
    }
    switch (e.kind()) {
        case Kind::Sum: {
            for (const auto& k : e.kids()) {
                if (!expand_terms(k, var, budget, out)) return false;
                if (static_cast<int>(out.size()) > budget) return false;
            }
            return true;
        }
        case Kind::Product: {
            bool has_sum = false;
            for (const auto& f : e.kids())
                if (f.kind() == Kind::Sum && depends_on(f, var)) has_sum = true;
            if (has_sum) {
                // Split sum factors raw and multiply pairwise before any
                // power is expanded: canonical prod() regroups matching
                // power bases (u^-1 * u^2 -> u), preserving cancellations
                // that multiplied-out powers would bury.
                std::vector<Expr> acc = {Expr::num(1)};
                for (const auto& f : e.kids()) {
                    std::vector<Expr> pieces;
                    if (f.kind() == Kind::Sum && depends_on(f, var))
                        pieces.assign(f.kids().begin(), f.kids().end());
                    else
                        pieces.push_back(f);
                    std::vector<Expr> next;
                    next.reserve(acc.size() * pieces.size());
                    for (const auto& a : acc)
                        for (const auto& b : pieces)
                            next.push_back(Expr::prod({a, b}));
                    if (static_cast<int>(next.size()) > budget) return false;
                    acc = std::move(next);
                }
                for (const auto& t : acc)
                    if (!expand_terms(t, var, budget, out)) return false;
                return true;
            }
            std::vector<Expr> acc = {Expr::num(1)};
            for (const auto& f : e.kids()) {
                std::vector<Expr> fterms;
                if (!expand_terms(f, var, budget, fterms)) return false;
                std::vector<Expr> next;
                next.reserve(acc.size() * fterms.size());
                for (const auto& a : acc)
                    for (const auto& b : fterms) next.push_back(Expr::prod({a, b}));
                if (static_cast<int>(next.size()) > budget) return false;
                acc = std::move(next);
            }
            for (auto& t : acc) out.push_back(std::move(t));
            return true;
        }
        case Kind::Power: {
            const Expr& b = e.base();
            const Expr& ex = e.exponent();
            if (b.kind() == Kind::Sum && ex.is_number() && ex.number().is_integer()) {
                long long n = ex.number().as_integer();
                if (n >= 2 && n <= 6) {
                    std::vector<Expr> acc;
                    if (!expand_terms(b, var, budget, acc)) return false;
                    std::vector<Expr> result = acc;
                    for (long long i = 1; i < n; ++i) {
                        std::vector<Expr> next;
                        for (const auto& a : result)
                            for (const auto& c : acc) next.push_back(Expr::prod({a, c}));
                        if (static_cast<int>(next.size()) > budget) return false;
                        // re-collect like terms to keep the count down
                        Expr folded = Expr::sum(next);
                        next.clear();
                        if (folded.kind() == Kind::Sum)
                            next.assign(folded.kids().begin(), folded.kids().end());
                        else
                            next.push_back(folded);
                        result = std::move(next);
                    }
                    for (auto& t : result) out.push_back(std::move(t));
                    return true;
                }
            }
            out.push_back(e);
            return true;
        }
        default:
            out.push_back(e);
            return true;
    }
}

}  // namespace

Expr expand_in(const Expr& e, const std::string& var, int term_budget) {
    std::vector<Expr> terms;
    if (!expand_terms(e, var, term_budget, terms)) return e;
    return Expr::sum(std::move(terms));
}

std::optional<std::pair<Expr, Expr>> linear_in(const Expr& e,
                                               const std::string& var) {
    Expr a = differentiate(e, var);
    if (free_symbols(a).count(var)) return std::nullopt;
    // A var-free derivative already makes e affine; read b off at var = 0
    // (structural cancellation of e - a*var can fail on factored forms).
    Expr b = substitute(e, var, Expr::num(0));
    if (free_symbols(b).count(var)) return std::nullopt;
    return std::make_pair(std::move(a), std::move(b));
}

}  // namespace mforge
