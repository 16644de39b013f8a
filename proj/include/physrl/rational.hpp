#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

namespace physrl::sym {

/// Exact rational over int64 with overflow-checked arithmetic. Operations
/// return nullopt instead of wrapping; callers degrade to double.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;  // > 0 always

    static std::optional<Rational> make(std::int64_t n, std::int64_t d) {
        if (d == 0) return std::nullopt;
        if (d < 0) {
            if (n == INT64_MIN || d == INT64_MIN) return std::nullopt;
            n = -n;
            d = -d;
        }
        std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        return Rational{n, d};
    }

    static Rational from_int(std::int64_t n) { return Rational{n, 1}; }

    bool is_integer() const { return den == 1; }
    bool is_zero() const { return num == 0; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }

    /// Three-way compare via 128-bit cross multiplication (never overflows).
    static int compare(const Rational& a, const Rational& b) {
        __int128 lhs = static_cast<__int128>(a.num) * b.den;
        __int128 rhs = static_cast<__int128>(b.num) * a.den;
        if (lhs < rhs) return -1;
        if (lhs > rhs) return 1;
        return 0;
    }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

namespace detail {
inline std::optional<std::int64_t> narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) return std::nullopt;
    return static_cast<std::int64_t>(v);
}
}  // namespace detail

inline std::optional<Rational> rat_add(const Rational& a, const Rational& b) {
    __int128 n = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
    __int128 d = static_cast<__int128>(a.den) * b.den;
    // reduce in 128 bits first so representable results survive large den*den
    __int128 an = n < 0 ? -n : n;
    std::int64_t g = static_cast<std::int64_t>(std::gcd(static_cast<unsigned __int128>(an),
                                                        static_cast<unsigned __int128>(d)));
    if (g > 1) {
        n /= g;
        d /= g;
    }
    auto nn = detail::narrow(n);
    auto dd = detail::narrow(d);
    if (!nn || !dd) return std::nullopt;
    return Rational::make(*nn, *dd);
}

inline std::optional<Rational> rat_mul(const Rational& a, const Rational& b) {
    std::int64_t g1 = std::gcd(a.num < 0 ? -a.num : a.num, b.den);
    std::int64_t g2 = std::gcd(b.num < 0 ? -b.num : b.num, a.den);
    __int128 n = static_cast<__int128>(a.num / (g1 ? g1 : 1)) * (b.num / (g2 ? g2 : 1));
    __int128 d = static_cast<__int128>(a.den / (g2 ? g2 : 1)) * (b.den / (g1 ? g1 : 1));
    auto nn = detail::narrow(n);
    auto dd = detail::narrow(d);
    if (!nn || !dd) return std::nullopt;
    return Rational::make(*nn, *dd);
}

inline Rational rat_neg(const Rational& a) { return Rational{-a.num, a.den}; }

inline std::optional<Rational> rat_inv(const Rational& a) {
    if (a.num == 0) return std::nullopt;
    return Rational::make(a.den, a.num);
}

/// a^e for integer e (|e| capped to keep folding cheap).
inline std::optional<Rational> rat_pow(const Rational& a, std::int64_t e) {
    if (e == 0) return Rational::from_int(1);
    if (e < 0) {
        auto inv = rat_inv(a);
        if (!inv || e == INT64_MIN) return std::nullopt;
        return rat_pow(*inv, -e);
    }
    if (e > 64) return std::nullopt;
    Rational acc = Rational::from_int(1);
    Rational base = a;
    while (e > 0) {
        if (e & 1) {
            auto r = rat_mul(acc, base);
            if (!r) return std::nullopt;
            acc = *r;
        }
        e >>= 1;
        if (e) {
            auto r = rat_mul(base, base);
            if (!r) return std::nullopt;
            base = *r;
        }
    }
    return acc;
}

/// Exact square root when numerator and denominator are perfect squares
/// (and the value is nonnegative).
inline std::optional<Rational> rat_sqrt(const Rational& a) {
    if (a.num < 0) return std::nullopt;
    auto isqrt = [](std::int64_t v) -> std::optional<std::int64_t> {
        if (v < 0) return std::nullopt;
        auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
        for (std::int64_t c = r > 1 ? r - 1 : 0; c <= r + 1; ++c)
            if (c * c == v) return c;
        return std::nullopt;
    };
    auto sn = isqrt(a.num);
    auto sd = isqrt(a.den);
    if (!sn || !sd) return std::nullopt;
    return Rational{*sn, *sd};
}

}  // namespace physrl::sym
