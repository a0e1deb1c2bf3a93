#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

namespace mforge {

// Exact rational with 64-bit numerator/denominator. All arithmetic is
// overflow-checked via 128-bit intermediates; operations return nullopt on
// overflow so callers can fall back to floating point.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d) : num_(n), den_(d) { reduce(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_one() const { return num_ == 1 && den_ == 1; }
    bool is_integer() const { return den_ == 1; }
    bool negative() const { return num_ < 0; }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    Rational negated() const {
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }

    static std::optional<Rational> add(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.den_ +
                     static_cast<__int128>(b.num_) * a.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make(n, d);
    }

    static std::optional<Rational> mul(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.num_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make(n, d);
    }

    // Integer power; e may be negative when the base is nonzero.
    static std::optional<Rational> pow(const Rational& a, long long e) {
        if (e == 0) return Rational(1);
        Rational base = a;
        if (e < 0) {
            if (a.num_ == 0) return std::nullopt;
            base = Rational(a.den_, a.num_);
            e = -e;
        }
        Rational acc(1);
        for (long long i = 0; i < e; ++i) {
            auto next = mul(acc, base);
            if (!next) return std::nullopt;
            acc = *next;
        }
        return acc;
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    // Exact order comparison (overflow-safe via 128-bit cross products).
    static int compare(const Rational& a, const Rational& b) {
        __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
        __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
        if (lhs < rhs) return -1;
        if (lhs > rhs) return 1;
        return 0;
    }

private:
    static std::optional<Rational> make(__int128 n, __int128 d) {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        constexpr __int128 kMax = INT64_MAX;
        constexpr __int128 kMin = INT64_MIN;
        if (n > kMax || n < kMin || d > kMax || d <= 0) return std::nullopt;
        Rational r;
        r.num_ = static_cast<long long>(n);
        r.den_ = static_cast<long long>(d);
        return r;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    void reduce() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (den_ == 0) den_ = 1;  // guarded by callers; never divide by zero
    }

    long long num_;
    long long den_;
};

}  // namespace mforge
