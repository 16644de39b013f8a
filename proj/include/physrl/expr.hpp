#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "physrl/rational.hpp"

namespace physrl::sym {

/// Numeric literal: exact rational when it fits int64, double otherwise
/// (large scientific-notation magnitudes). Arithmetic degrades exact→decimal
/// on overflow rather than failing.
struct Number {
    bool exact = true;
    Rational rat{0, 1};
    double dec = 0.0;

    static Number from_rat(const Rational& r) { return Number{true, r, 0.0}; }
    static Number from_int(std::int64_t n) { return from_rat(Rational::from_int(n)); }
    static Number from_double(double d) { return Number{false, {0, 1}, d}; }

    double value() const { return exact ? rat.value() : dec; }
    bool is_zero() const { return exact ? rat.is_zero() : dec == 0.0; }
    bool is_one() const { return exact && rat == Rational{1, 1}; }
    bool is_integer() const { return exact && rat.is_integer(); }

    friend Number operator+(const Number& a, const Number& b) {
        if (a.exact && b.exact)
            if (auto r = rat_add(a.rat, b.rat)) return from_rat(*r);
        return from_double(a.value() + b.value());
    }
    friend Number operator*(const Number& a, const Number& b) {
        if (a.exact && b.exact)
            if (auto r = rat_mul(a.rat, b.rat)) return from_rat(*r);
        return from_double(a.value() * b.value());
    }
    Number neg() const {
        return exact ? from_rat(rat_neg(rat)) : from_double(-dec);
    }

    /// Structural equality used by canonical-form comparison: exact and
    /// decimal literals never unify.
    friend bool operator==(const Number& a, const Number& b) {
        if (a.exact != b.exact) return false;
        return a.exact ? a.rat == b.rat : a.dec == b.dec;
    }

    static int compare(const Number& a, const Number& b) {
        if (a.exact != b.exact) return a.exact ? -1 : 1;
        if (a.exact) return Rational::compare(a.rat, b.rat);
        if (a.dec < b.dec) return -1;
        if (a.dec > b.dec) return 1;
        return 0;
    }

    std::string str() const;
};

enum class Kind { Number, Constant, Variable, Func, Pow, Div, Neg, Mul, Add };

enum class ConstName { Pi, E };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Children layout by kind:
///   Add/Mul: all terms/factors;  Pow: [base, exponent];
///   Div: [numerator, denominator];  Neg/Func: [child].
struct Expr {
    Kind kind;
    Number num;                   // Kind::Number
    ConstName cname = ConstName::Pi;  // Kind::Constant
    std::string name;             // Variable / Func
    std::vector<ExprPtr> kids;
};

ExprPtr make_number(const Number& n);
ExprPtr make_int(std::int64_t n);
ExprPtr make_rat(std::int64_t num, std::int64_t den);
ExprPtr make_const(ConstName c);
ExprPtr make_var(const std::string& name);
ExprPtr make_add(std::vector<ExprPtr> kids);
ExprPtr make_mul(std::vector<ExprPtr> kids);
ExprPtr make_pow(ExprPtr base, ExprPtr exp);
ExprPtr make_div(ExprPtr num, ExprPtr den);
ExprPtr make_neg(ExprPtr child);
ExprPtr make_func(const std::string& name, ExprPtr arg);

/// Total structural order over expressions (drives canonical child sorting).
int compare(const ExprPtr& a, const ExprPtr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);

std::size_t count_nodes(const ExprPtr& e);
void collect_free_vars(const ExprPtr& e, std::set<std::string>& out);
std::set<std::string> free_vars(const ExprPtr& e);

/// Numeric evaluation at a variable assignment. Out-of-domain points yield
/// NaN/inf rather than throwing.
double eval(const ExprPtr& e, const std::map<std::string, double>& vars);

/// Deterministic ASCII rendering; output re-parses to an equivalent tree.
std::string render(const ExprPtr& e);

bool is_known_func(const std::string& name);

}  // namespace physrl::sym
