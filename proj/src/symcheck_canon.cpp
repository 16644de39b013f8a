#include <algorithm>
#include <cmath>
#include <map>

#include "physrl/symcheck.hpp"

namespace physrl::sym {

namespace {

struct CmpLess {
    bool operator()(const ExprPtr& a, const ExprPtr& b) const { return compare(a, b) < 0; }
};

bool is_number(const ExprPtr& e) { return e->kind == Kind::Number; }

bool is_int_in(const ExprPtr& e, std::int64_t lo, std::int64_t hi, std::int64_t& out) {
    if (e->kind != Kind::Number || !e->num.is_integer()) return false;
    std::int64_t v = e->num.rat.num;
    if (v < lo || v > hi) return false;
    out = v;
    return true;
}

/// Rewrites to a closed normal form:
///   Neg/Div eliminated into Mul/Pow(-1); commutative children flattened,
///   folded, and sorted; products of sums and small integer powers of sums
///   expanded; like terms collected. Node construction is budgeted and
///   overruns raise CanonicalBlowup.
class Canonicalizer {
  public:
    explicit Canonicalizer(std::size_t max_nodes) : budget_(max_nodes) {}

    ExprPtr canon(const ExprPtr& e) {
        switch (e->kind) {
            case Kind::Number:
            case Kind::Constant:
            case Kind::Variable:
                return e;
            case Kind::Neg:
                return canon_mul({make_int(-1), canon(e->kids[0])});
            case Kind::Div:
                return canon_mul(
                    {canon(e->kids[0]), canon_pow(canon(e->kids[1]), make_int(-1))});
            case Kind::Func: {
                ExprPtr arg = canon(e->kids[0]);
                if (e->name == "sqrt") return canon_pow(arg, make_rat(1, 2));
                if (e->name == "exp") return canon_pow(make_const(ConstName::E), arg);
                if (e->name == "abs" && is_number(arg)) {
                    Number n = arg->num;
                    return charge(make_number(n.value() < 0 ? n.neg() : n));
                }
                return charge(make_func(e->name, arg));
            }
            case Kind::Pow:
                return canon_pow(canon(e->kids[0]), canon(e->kids[1]));
            case Kind::Mul: {
                std::vector<ExprPtr> kids;
                kids.reserve(e->kids.size());
                for (const auto& k : e->kids) kids.push_back(canon(k));
                return canon_mul(std::move(kids));
            }
            case Kind::Add: {
                std::vector<ExprPtr> kids;
                kids.reserve(e->kids.size());
                for (const auto& k : e->kids) kids.push_back(canon(k));
                return canon_add(std::move(kids));
            }
        }
        return e;
    }

  private:
    std::size_t budget_;
    std::size_t used_ = 0;

    ExprPtr charge(ExprPtr e, std::size_t n = 1) {
        used_ += n;
        if (used_ > budget_)
            throw CanonicalBlowup("canonical form exceeded " + std::to_string(budget_) +
                                  " nodes");
        return e;
    }

    static ExprPtr one() {
        static const ExprPtr v = make_int(1);
        return v;
    }
    static ExprPtr zero() {
        static const ExprPtr v = make_int(0);
        return v;
    }

    // --- power ------------------------------------------------------------

    ExprPtr canon_pow(ExprPtr base, ExprPtr exp) {
        if (is_number(exp)) {
            if (exp->num.is_zero()) return one();
            if (exp->num.is_one()) return base;
        }
        if (base->kind == Kind::Number && base->num.is_one()) return one();

        std::int64_t n = 0;
        if (is_int_in(exp, -64, 64, n)) {
            if (base->kind == Kind::Number) {
                const Number& b = base->num;
                if (b.exact) {
                    if (auto r = rat_pow(b.rat, n))
                        return charge(make_number(Number::from_rat(*r)));
                }
                double v = std::pow(b.value(), static_cast<double>(n));
                if (std::isfinite(v)) return charge(make_number(Number::from_double(v)));
                // 0^-n and friends stay symbolic rather than minting inf
            } else if (base->kind == Kind::Mul) {
                std::vector<ExprPtr> factors;
                for (const auto& f : base->kids)
                    factors.push_back(canon_pow(f, make_int(n)));
                return canon_mul(std::move(factors));
            } else if (base->kind == Kind::Pow) {
                ExprPtr inner_exp = canon_mul({base->kids[1], make_int(n)});
                return canon_pow(base->kids[0], inner_exp);
            } else if (base->kind == Kind::Add && n >= 2 && n <= 4) {
                ExprPtr acc = base;
                for (std::int64_t k = 1; k < n; ++k) acc = mul_expand(acc, base);
                return acc;
            } else if (base->kind == Kind::Add && n <= -2 && n >= -4) {
                ExprPtr expanded = canon_pow(base, make_int(-n));
                return charge(make_pow(expanded, make_int(-1)));
            }
        }
        // exact square roots of perfect-square rationals
        if (is_number(exp) && exp->num.exact && exp->num.rat == Rational{1, 2} &&
            base->kind == Kind::Number && base->num.exact) {
            if (auto r = rat_sqrt(base->num.rat))
                return charge(make_number(Number::from_rat(*r)));
        }
        return charge(make_pow(std::move(base), std::move(exp)));
    }

    // --- product ----------------------------------------------------------

    ExprPtr canon_mul(std::vector<ExprPtr> input) {
        Number coeff = Number::from_int(1);
        std::map<ExprPtr, std::vector<ExprPtr>, CmpLess> powers;
        std::vector<ExprPtr> pending = std::move(input);

        while (!pending.empty()) {
            ExprPtr f = pending.back();
            pending.pop_back();
            if (f->kind == Kind::Mul) {
                for (const auto& k : f->kids) pending.push_back(k);
            } else if (is_number(f)) {
                coeff = coeff * f->num;
            } else if (f->kind == Kind::Pow) {
                powers[f->kids[0]].push_back(f->kids[1]);
            } else {
                powers[f].push_back(one());
            }
        }
        if (coeff.is_zero()) return zero();

        std::vector<ExprPtr> factors;
        std::vector<ExprPtr> sums;  // Add factors to distribute
        for (auto& [base, exps] : powers) {
            ExprPtr e = exps.size() == 1 ? exps[0] : canon_add(std::move(exps));
            ExprPtr f = canon_pow(base, e);
            if (is_number(f)) {
                coeff = coeff * f->num;
                if (coeff.is_zero()) return zero();
            } else if (f->kind == Kind::Add) {
                sums.push_back(f);
            } else if (f->kind == Kind::Mul) {
                // regrouping produced a product (e.g. folded sub-coefficient)
                for (const auto& k : f->kids) {
                    if (is_number(k))
                        coeff = coeff * k->num;
                    else if (k->kind == Kind::Add)
                        sums.push_back(k);
                    else
                        factors.push_back(k);
                }
            } else {
                factors.push_back(f);
            }
        }

        if (!sums.empty()) return distribute(coeff, std::move(factors), std::move(sums));

        std::sort(factors.begin(), factors.end(), CmpLess{});
        if (factors.empty()) return charge(make_number(coeff));
        if (coeff.is_one())
            return factors.size() == 1 ? factors[0] : charge(make_mul(std::move(factors)));
        std::vector<ExprPtr> kids;
        kids.reserve(factors.size() + 1);
        kids.push_back(charge(make_number(coeff)));
        for (auto& f : factors) kids.push_back(std::move(f));
        return charge(make_mul(std::move(kids)));
    }

    /// Product of two canonical expressions with sums multiplied out term by
    /// term (canon_mul would just regroup them into a power again).
    ExprPtr mul_expand(const ExprPtr& a, const ExprPtr& b) {
        const bool a_add = a->kind == Kind::Add;
        const bool b_add = b->kind == Kind::Add;
        if (!a_add && !b_add) return canon_mul({a, b});
        std::vector<ExprPtr> left = a_add ? a->kids : std::vector<ExprPtr>{a};
        std::vector<ExprPtr> right = b_add ? b->kids : std::vector<ExprPtr>{b};
        charge(nullptr, left.size() * right.size());
        std::vector<ExprPtr> terms;
        terms.reserve(left.size() * right.size());
        for (const auto& ta : left)
            for (const auto& tb : right) terms.push_back(canon_mul({ta, tb}));
        return canon_add(std::move(terms));
    }

    /// Multiply out (coeff * factors) against one or more sum factors.
    ExprPtr distribute(const Number& coeff, std::vector<ExprPtr> factors,
                       std::vector<ExprPtr> sums) {
        std::vector<ExprPtr> terms;
        ExprPtr seedling;
        if (coeff.is_one() && factors.empty())
            seedling = one();
        else if (factors.empty())
            seedling = charge(make_number(coeff));
        else {
            std::vector<ExprPtr> kids;
            if (!coeff.is_one()) kids.push_back(charge(make_number(coeff)));
            for (auto& f : factors) kids.push_back(std::move(f));
            seedling = kids.size() == 1 ? kids[0] : charge(make_mul(std::move(kids)));
        }
        terms.push_back(seedling);
        for (const auto& sum : sums) {
            charge(nullptr, terms.size() * sum->kids.size());
            std::vector<ExprPtr> next;
            next.reserve(terms.size() * sum->kids.size());
            for (const auto& t : terms)
                for (const auto& s : sum->kids) next.push_back(canon_mul({t, s}));
            terms = std::move(next);
        }
        return canon_add(std::move(terms));
    }

    // --- sum ----------------------------------------------------------------

    /// Split a canonical term into (numeric coefficient, monomial key).
    static std::pair<Number, ExprPtr> split_coeff(const ExprPtr& term) {
        if (is_number(term)) return {term->num, one()};
        if (term->kind == Kind::Mul && is_number(term->kids[0])) {
            std::vector<ExprPtr> rest(term->kids.begin() + 1, term->kids.end());
            ExprPtr key = rest.size() == 1 ? rest[0] : make_mul(std::move(rest));
            return {term->kids[0]->num, key};
        }
        return {Number::from_int(1), term};
    }

    ExprPtr canon_add(std::vector<ExprPtr> input) {
        std::map<ExprPtr, Number, CmpLess> by_key;
        std::vector<ExprPtr> pending = std::move(input);
        while (!pending.empty()) {
            ExprPtr t = pending.back();
            pending.pop_back();
            if (t->kind == Kind::Add) {
                for (const auto& k : t->kids) pending.push_back(k);
                continue;
            }
            auto [c, key] = split_coeff(t);
            auto it = by_key.find(key);
            if (it == by_key.end())
                by_key.emplace(key, c);
            else
                it->second = it->second + c;
        }

        std::vector<ExprPtr> terms;
        for (const auto& [key, c] : by_key) {
            if (c.is_zero()) continue;
            if (key->kind == Kind::Number && key->num.is_one()) {
                terms.push_back(charge(make_number(c)));
            } else if (c.is_one()) {
                terms.push_back(key);
            } else {
                std::vector<ExprPtr> kids;
                kids.push_back(charge(make_number(c)));
                if (key->kind == Kind::Mul)
                    for (const auto& k : key->kids) kids.push_back(k);
                else
                    kids.push_back(key);
                terms.push_back(charge(make_mul(std::move(kids))));
            }
        }
        if (terms.empty()) return zero();
        if (terms.size() == 1) return terms[0];
        std::sort(terms.begin(), terms.end(), CmpLess{});
        return charge(make_add(std::move(terms)));
    }
};

}  // namespace

ExprPtr canonicalize(const ExprPtr& e, std::size_t max_nodes) {
    Canonicalizer c(max_nodes);
    return c.canon(e);
}

}  // namespace physrl::sym
