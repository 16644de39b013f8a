#include "physrl/expr.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace physrl::sym {

std::string Number::str() const {
    if (exact) return rat.str();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", dec);
    return buf;
}

ExprPtr make_number(const Number& n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Number;
    e->num = n;
    return e;
}

ExprPtr make_int(std::int64_t n) { return make_number(Number::from_int(n)); }

ExprPtr make_rat(std::int64_t num, std::int64_t den) {
    auto r = Rational::make(num, den);
    return make_number(r ? Number::from_rat(*r)
                         : Number::from_double(static_cast<double>(num) / den));
}

ExprPtr make_const(ConstName c) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Constant;
    e->cname = c;
    return e;
}

ExprPtr make_var(const std::string& name) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Variable;
    e->name = name;
    return e;
}

static ExprPtr make_nary(Kind k, std::vector<ExprPtr> kids) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->kids = std::move(kids);
    return e;
}

ExprPtr make_add(std::vector<ExprPtr> kids) { return make_nary(Kind::Add, std::move(kids)); }
ExprPtr make_mul(std::vector<ExprPtr> kids) { return make_nary(Kind::Mul, std::move(kids)); }

ExprPtr make_pow(ExprPtr base, ExprPtr exp) {
    return make_nary(Kind::Pow, {std::move(base), std::move(exp)});
}

ExprPtr make_div(ExprPtr num, ExprPtr den) {
    return make_nary(Kind::Div, {std::move(num), std::move(den)});
}

ExprPtr make_neg(ExprPtr child) { return make_nary(Kind::Neg, {std::move(child)}); }

ExprPtr make_func(const std::string& name, ExprPtr arg) {
    auto e = make_nary(Kind::Func, {std::move(arg)});
    const_cast<Expr*>(e.get())->name = name;
    return e;
}

bool is_known_func(const std::string& name) {
    return name == "sqrt" || name == "sin" || name == "cos" || name == "tan" ||
           name == "exp" || name == "ln" || name == "log" || name == "abs";
}

int compare(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return 0;
    if (a->kind != b->kind)
        return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
    switch (a->kind) {
        case Kind::Number:
            return Number::compare(a->num, b->num);
        case Kind::Constant:
            if (a->cname == b->cname) return 0;
            return static_cast<int>(a->cname) < static_cast<int>(b->cname) ? -1 : 1;
        case Kind::Variable:
            return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
        case Kind::Func: {
            int c = a->name.compare(b->name);
            if (c != 0) return c < 0 ? -1 : 1;
            return compare(a->kids[0], b->kids[0]);
        }
        default: {
            if (a->kids.size() != b->kids.size())
                return a->kids.size() < b->kids.size() ? -1 : 1;
            for (std::size_t i = 0; i < a->kids.size(); ++i) {
                int c = compare(a->kids[i], b->kids[i]);
                if (c != 0) return c;
            }
            return 0;
        }
    }
}

bool equal(const ExprPtr& a, const ExprPtr& b) { return compare(a, b) == 0; }

std::size_t count_nodes(const ExprPtr& e) {
    std::size_t n = 1;
    for (const auto& k : e->kids) n += count_nodes(k);
    return n;
}

void collect_free_vars(const ExprPtr& e, std::set<std::string>& out) {
    if (e->kind == Kind::Variable) out.insert(e->name);
    for (const auto& k : e->kids) collect_free_vars(k, out);
}

std::set<std::string> free_vars(const ExprPtr& e) {
    std::set<std::string> out;
    collect_free_vars(e, out);
    return out;
}

double eval(const ExprPtr& e, const std::map<std::string, double>& vars) {
    switch (e->kind) {
        case Kind::Number:
            return e->num.value();
        case Kind::Constant:
            return e->cname == ConstName::Pi ? std::numbers::pi : std::numbers::e;
        case Kind::Variable: {
            auto it = vars.find(e->name);
            return it == vars.end() ? std::nan("") : it->second;
        }
        case Kind::Add: {
            double s = 0.0;
            for (const auto& k : e->kids) s += eval(k, vars);
            return s;
        }
        case Kind::Mul: {
            double p = 1.0;
            for (const auto& k : e->kids) p *= eval(k, vars);
            return p;
        }
        case Kind::Pow:
            return std::pow(eval(e->kids[0], vars), eval(e->kids[1], vars));
        case Kind::Div:
            return eval(e->kids[0], vars) / eval(e->kids[1], vars);
        case Kind::Neg:
            return -eval(e->kids[0], vars);
        case Kind::Func: {
            double v = eval(e->kids[0], vars);
            if (e->name == "sqrt") return std::sqrt(v);
            if (e->name == "sin") return std::sin(v);
            if (e->name == "cos") return std::cos(v);
            if (e->name == "tan") return std::tan(v);
            if (e->name == "exp") return std::exp(v);
            if (e->name == "ln") return std::log(v);
            if (e->name == "log") return std::log10(v);
            if (e->name == "abs") return std::fabs(v);
            return std::nan("");
        }
    }
    return std::nan("");
}

namespace {

// Rendering precedence: higher binds tighter.
int prec(const ExprPtr& e) {
    switch (e->kind) {
        case Kind::Add: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        case Kind::Pow: return 4;
        default: return 5;
    }
}

void render_into(const ExprPtr& e, std::string& out);

void render_child(const ExprPtr& child, int parent_prec, std::string& out) {
    bool paren = prec(child) < parent_prec;
    // negative literals under a tight parent need parens too: x^(-1)
    if (!paren && child->kind == Kind::Number && parent_prec >= 2) {
        if (child->num.value() < 0 || (child->num.exact && !child->num.rat.is_integer()))
            paren = true;
    }
    if (paren) out.push_back('(');
    render_into(child, out);
    if (paren) out.push_back(')');
}

void render_into(const ExprPtr& e, std::string& out) {
    switch (e->kind) {
        case Kind::Number:
            out += e->num.str();
            return;
        case Kind::Constant:
            out += e->cname == ConstName::Pi ? "pi" : "e";
            return;
        case Kind::Variable:
            out += e->name;
            return;
        case Kind::Func:
            out += e->name;
            out.push_back('(');
            render_into(e->kids[0], out);
            out.push_back(')');
            return;
        case Kind::Pow:
            render_child(e->kids[0], 5, out);
            out.push_back('^');
            render_child(e->kids[1], 5, out);
            return;
        case Kind::Div:
            render_child(e->kids[0], 3, out);
            out.push_back('/');
            render_child(e->kids[1], 3, out);
            return;
        case Kind::Neg:
            out.push_back('-');
            render_child(e->kids[0], 3, out);
            return;
        case Kind::Mul: {
            bool first = true;
            for (const auto& k : e->kids) {
                if (!first) out.push_back('*');
                render_child(k, 2, out);
                first = false;
            }
            return;
        }
        case Kind::Add: {
            bool first = true;
            for (const auto& k : e->kids) {
                std::string piece;
                render_child(k, 1, piece);
                if (!first && !piece.empty() && piece[0] == '-') {
                    out += " - ";
                    out += piece.substr(1);
                } else if (!first) {
                    out += " + ";
                    out += piece;
                } else {
                    out += piece;
                }
                first = false;
            }
            return;
        }
    }
}

}  // namespace

std::string render(const ExprPtr& e) {
    std::string out;
    render_into(e, out);
    return out;
}

}  // namespace physrl::sym
