#include <doctest.h>

#include <cmath>

#include "physrl/symcheck.hpp"

using namespace physrl;
using namespace physrl::sym;
using corpus::AnswerType;
using corpus::GoldAnswer;

namespace {

GoldAnswer gold(const std::string& value, AnswerType t = AnswerType::Expression) {
    GoldAnswer g;
    g.value = value;
    g.answer_type = t;
    return g;
}

bool canon_same(const std::string& a, const std::string& b) {
    return equal(canonicalize(parse_expr(a)), canonicalize(parse_expr(b)));
}

// Small seeded AST generator for property tests.
ExprPtr random_expr(Rng& rng, int depth) {
    const char* vars[] = {"x", "y", "z"};
    if (depth <= 0 || rng.next_u64() % 4 == 0) {
        switch (rng.next_u64() % 3) {
            case 0: return make_int(static_cast<std::int64_t>(rng.next_u64() % 7) - 3);
            case 1: return make_var(vars[rng.next_u64() % 3]);
            default: return make_rat(1 + rng.next_u64() % 5, 1 + rng.next_u64() % 5);
        }
    }
    switch (rng.next_u64() % 6) {
        case 0:
            return make_add({random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
        case 1:
            return make_mul({random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
        case 2:
            return make_neg(random_expr(rng, depth - 1));
        case 3:
            return make_pow(random_expr(rng, depth - 1),
                            make_int(1 + rng.next_u64() % 3));
        case 4:
            return make_div(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
        default:
            return make_func("sin", random_expr(rng, depth - 1));
    }
}

// Structure-preserving shuffle: commutative children permuted recursively.
ExprPtr shuffled(const ExprPtr& e, Rng& rng) {
    if (e->kids.empty()) return e;
    std::vector<ExprPtr> kids;
    for (const auto& k : e->kids) kids.push_back(shuffled(k, rng));
    if (e->kind == Kind::Add || e->kind == Kind::Mul) {
        for (std::size_t i = kids.size(); i > 1; --i)
            std::swap(kids[i - 1], kids[rng.next_u64() % i]);
        return e->kind == Kind::Add ? make_add(std::move(kids)) : make_mul(std::move(kids));
    }
    if (e->kind == Kind::Pow) return make_pow(kids[0], kids[1]);
    if (e->kind == Kind::Div) return make_div(kids[0], kids[1]);
    if (e->kind == Kind::Neg) return make_neg(kids[0]);
    return make_func(e->name, kids[0]);
}

}  // namespace

TEST_SUITE_BEGIN("symcheck");

// ---------------------------------------------------------------------------
// Grammar: hand-built AST oracle cases
// ---------------------------------------------------------------------------

TEST_CASE("parse: golden grammar suite") {
    struct Case {
        const char* text;
        ExprPtr want;
    };
    auto x = make_var("x");
    const Case cases[] = {
        {"0", make_int(0)},
        {"42", make_int(42)},
        {"3.25", make_rat(13, 4)},
        {"5e2", make_int(500)},
        {"1.5e-3", make_rat(3, 2000)},
        {"x", x},
        {"S_c", make_var("S_c")},
        {"S_{tot}", make_var("S_tot")},
        {"\\rho", make_var("rho")},
        {"varepsilon", make_var("epsilon")},
        {"\\pi", make_const(ConstName::Pi)},
        {"e", make_const(ConstName::E)},
        {"-x", make_neg(x)},
        {"x+1", make_add({x, make_int(1)})},
        {"x-1", make_add({x, make_neg(make_int(1))})},
        {"2x", make_mul({make_int(2), x})},
        {"x y", make_mul({x, make_var("y")})},
        {"(x-1)(x+1)",
         make_mul({make_add({x, make_neg(make_int(1))}), make_add({x, make_int(1)})})},
        {"x^2", make_pow(x, make_int(2))},
        {"x^{a+b}", make_pow(x, make_add({make_var("a"), make_var("b")}))},
        {"a/b", make_div(make_var("a"), make_var("b"))},
        {"\\frac{a}{b}", make_div(make_var("a"), make_var("b"))},
        {"\\dfrac{S_c A}{2}",
         make_div(make_mul({make_var("S_c"), make_var("A")}), make_int(2))},
        {"\\sqrt{x}", make_func("sqrt", x)},
        {"\\sqrt[3]{x}", make_pow(x, make_div(make_int(1), make_int(3)))},
        {"sin(x)", make_func("sin", x)},
        {"\\sin x", make_func("sin", x)},
        {"\\ln{x}", make_func("ln", x)},
        {"2\\pi r", make_mul({make_mul({make_int(2), make_const(ConstName::Pi)}),
                              make_var("r")})},
        {"19.8\\text{ mJ}", make_rat(99, 5)},
    };
    for (const auto& c : cases) {
        CAPTURE(c.text);
        ExprPtr got = parse_expr(c.text);
        CHECK(equal(got, c.want));
    }
}

TEST_CASE("parse: precedence and associativity") {
    // a/b/c = (a/b)/c; a/b*c = (a/b)*c; exponent binds tighter than juxtaposition
    CHECK(canon_same("a/b/c", "a/(b*c)"));
    CHECK(canon_same("a/b c", "(a/b)*c"));
    CHECK(canon_same("x^2 y", "(x^2)*y"));
    CHECK(canon_same("2^3^2", "512"));  // right-associative
    CHECK(canon_same("-x^2", "-(x^2)"));
    CHECK(canon_same("x^-1", "1/x"));
}

TEST_CASE("parse: syntax errors carry offset and hint") {
    try {
        parse_expr("\\frac{1}");
        FAIL("expected ExprSyntaxError");
    } catch (const ExprSyntaxError& e) {
        CHECK(e.offset == 8);
        CHECK(e.expected == "'{'");
    }
    CHECK_THROWS_AS(parse_expr(""), ExprSyntaxError);
    CHECK_THROWS_AS(parse_expr("x +"), ExprSyntaxError);
    CHECK_THROWS_AS(parse_expr("(a"), ExprSyntaxError);
    CHECK_THROWS_AS(parse_expr("\\unknowncmd{x}"), ExprSyntaxError);
    CHECK_THROWS_AS(parse_expr("a = b"), ExprSyntaxError);
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

TEST_CASE("canonicalize: commutativity") {
    CHECK(canon_same("a+b", "b+a"));
    CHECK(canon_same("a b c", "c b a"));
}

TEST_CASE("canonicalize: cancellation to zero") {
    ExprPtr c = canonicalize(parse_expr("x - x"));
    CHECK(equal(c, make_int(0)));
}

TEST_CASE("canonicalize: factorization equivalence") {
    CHECK(canon_same("x^2 - 1", "(x-1)(x+1)"));
    CHECK(canon_same("(a+b)^2", "a^2 + 2 a b + b^2"));
    CHECK(canon_same("(x+1)^3", "x^3 + 3x^2 + 3x + 1"));
    CHECK(canon_same("(x+1)^4", "x^4 + 4x^3 + 6x^2 + 4x + 1"));
}

TEST_CASE("canonicalize: rational folding and division cancellation") {
    CHECK(canon_same("2/4", "1/2"));
    CHECK(canon_same("\\frac{2x}{4y}", "x/(2y)"));
    CHECK(canon_same("x/x", "1"));
    CHECK(canon_same("\\sqrt{4}", "2"));
    CHECK(canon_same("2^{10}", "1024"));
    CHECK(canon_same("0.125", "1/8"));
}

TEST_CASE("canonicalize: sqrt and exp rewrites") {
    CHECK(canon_same("\\sqrt{x}", "x^{0.5}"));
    CHECK(canon_same("\\exp(x)", "e^x"));
}

TEST_CASE("canonicalize: idempotence on random ASTs") {
    Rng rng(11);
    for (int i = 0; i < 300; ++i) {
        ExprPtr e = random_expr(rng, 4);
        ExprPtr c1, c2;
        try {
            c1 = canonicalize(e);
            c2 = canonicalize(c1);
        } catch (const CanonicalBlowup&) {
            continue;
        }
        CHECK(equal(c1, c2));
    }
}

TEST_CASE("canonicalize: node budget raises CanonicalBlowup") {
    // (a+b+c+d)^4 expands to hundreds of nodes; a budget of 16 cannot hold it
    ExprPtr e = parse_expr("(a+b+c+d)^4");
    CHECK_THROWS_AS(canonicalize(e, 16), CanonicalBlowup);
}

// ---------------------------------------------------------------------------
// Numeric probing
// ---------------------------------------------------------------------------

TEST_CASE("probe: equal products") {
    EquivConfig cfg;
    CHECK(numeric_probe_equal(parse_expr("S_c*A/2"), parse_expr("0.5*A*S_c"), cfg));
}

TEST_CASE("probe: distinct expressions rejected") {
    EquivConfig cfg;
    CHECK_FALSE(numeric_probe_equal(parse_expr("x"), parse_expr("x+1"), cfg));
}

TEST_CASE("probe: sqrt(x^2) equals x on the positive range") {
    EquivConfig cfg;  // probe range [0.25, 4] is positive
    CHECK(numeric_probe_equal(parse_expr("\\sqrt{x^2}"), parse_expr("x"), cfg));
}

TEST_CASE("probe: differing free variables is an immediate false") {
    EquivConfig cfg;
    CHECK_FALSE(numeric_probe_equal(parse_expr("x"), parse_expr("y"), cfg));
}

TEST_CASE("probe: oracle agreement via direct evaluation") {
    EquivConfig cfg;
    cfg.seed = 5;
    const char* pairs[][2] = {
        {"(x+y)^2", "x^2 + 2 x y + y^2"},
        {"x/(x+1) + 1/(x+1)", "(x+1)/(x+1)"},
        {"2 sin(x) cos(x)", "sin(2 x)"},
        {"\\sqrt{x}\\sqrt{x}", "x"},
    };
    for (const auto& p : pairs) {
        CAPTURE(std::string(p[0]));
        CHECK(numeric_probe_equal(parse_expr(p[0]), parse_expr(p[1]), cfg));
    }
}

TEST_CASE("probe: domain exhaustion raises ProbeDomainError") {
    EquivConfig cfg;
    // ln(-x^2) is non-finite everywhere on the probe range
    CHECK_THROWS_AS(
        numeric_probe_equal(parse_expr("\\ln(0 - x^2)"), parse_expr("\\ln(0-x^2) + 0"), cfg),
        ProbeDomainError);
}

TEST_CASE("probe: determinism across calls") {
    EquivConfig cfg;
    cfg.seed = 42;
    auto e1 = parse_expr("x^3 - x");
    auto e2 = parse_expr("x(x-1)(x+1)");
    bool first = numeric_probe_equal(e1, e2, cfg);
    for (int i = 0; i < 10; ++i) CHECK(numeric_probe_equal(e1, e2, cfg) == first);
}

// ---------------------------------------------------------------------------
// equivalent: full pipeline
// ---------------------------------------------------------------------------

TEST_CASE("equivalent: solution-sheet pairs") {
    EquivConfig cfg;
    CHECK(equivalent("\\dfrac{A}{4 \\rho g}", gold("A/(4*rho*g)"), cfg));
    CHECK(equivalent("F_s^* = \\dfrac{S_c A}{2}", gold("S_c*A/2"), cfg));
    CHECK(equivalent("\\dfrac{S_c A^2}{2 \\rho g}", gold("S_c*A^2/(2*rho*g)"), cfg));
}

TEST_CASE("equivalent: numeric tolerance") {
    EquivConfig cfg;
    CHECK(equivalent("19.79", gold("19.8", AnswerType::Numeric), cfg));
    CHECK_FALSE(equivalent("19.5", gold("19.8", AnswerType::Numeric), cfg));
    auto g = gold("100", AnswerType::Numeric);
    g.tolerance = 0.05;
    CHECK(equivalent("104", g, cfg));
    CHECK_FALSE(equivalent("106", g, cfg));
}

TEST_CASE("equivalent: unparseable prediction is false, never an error") {
    EquivConfig cfg;
    CHECK_FALSE(equivalent("garbled \\frac{", gold("x"), cfg));
    CHECK_FALSE(equivalent("", gold("x"), cfg));
}

TEST_CASE("equivalent: corrupt gold raises") {
    EquivConfig cfg;
    CHECK_THROWS_AS(equivalent("x", gold("\\frac{1}"), cfg), GoldCorruptError);
}

TEST_CASE("equivalent: stages are reported") {
    EquivConfig cfg;
    CHECK(equivalent_detail("a+b", gold("b+a"), cfg).stage == EquivStage::Canonical);
    CHECK(equivalent_detail("\\sqrt{x^2}", gold("x"), cfg).stage == EquivStage::Probe);
    CHECK(equivalent_detail("19.79", gold("19.8", AnswerType::Numeric), cfg).stage ==
          EquivStage::Numeric);
}

TEST_CASE("equivalent: tuple and interval element-wise") {
    EquivConfig cfg;
    CHECK(equivalent("(1/2, 2)", gold("(0.5, 2)", AnswerType::Tuple), cfg));
    CHECK(equivalent("[0.25, 4]", gold("[1/4, 4]", AnswerType::Interval), cfg));
    CHECK_FALSE(equivalent("(1, 2)", gold("(1, 3)", AnswerType::Tuple), cfg));
    CHECK_FALSE(equivalent("(1, 2, 3)", gold("(1, 2)", AnswerType::Tuple), cfg));
    CHECK(equivalent("(a+b, a-b)", gold("(b+a, a-b)", AnswerType::Tuple), cfg));
}

TEST_CASE("equivalent: boolean and multiple choice tokens") {
    EquivConfig cfg;
    CHECK(equivalent("True", gold("true", AnswerType::Boolean), cfg));
    CHECK(equivalent(" B ", gold("B", AnswerType::MultipleChoice), cfg));
    CHECK(equivalent("\\text{B}", gold("B", AnswerType::MultipleChoice), cfg));
    CHECK_FALSE(equivalent("A", gold("B", AnswerType::MultipleChoice), cfg));
}

TEST_CASE("equivalent: golden corpus") {
    EquivConfig cfg;
    struct Pair {
        const char* pred;
        const char* gold;
        bool want;
        AnswerType type;
    };
    const Pair corpus[] = {
        // commutativity / reordering
        {"a+b", "b+a", true, AnswerType::Expression},
        {"a b", "b a", true, AnswerType::Expression},
        {"a+b+c", "c+b+a", true, AnswerType::Expression},
        {"x y z", "z y x", true, AnswerType::Expression},
        {"a-b", "-b+a", true, AnswerType::Expression},
        {"2\\pi r", "r \\cdot 2 \\pi", true, AnswerType::Expression},
        // factorization / expansion
        {"x^2-1", "(x-1)(x+1)", true, AnswerType::Expression},
        {"(a+b)^2", "a^2+2ab+b^2", false, AnswerType::Expression},  // "2ab" is one symbol
        {"(a+b)^2", "a^2+2 a b+b^2", true, AnswerType::Expression},
        {"x^2+2x+1", "(x+1)^2", true, AnswerType::Expression},
        {"x^3-x", "x(x-1)(x+1)", true, AnswerType::Expression},
        {"a^2-b^2", "(a-b)(a+b)", true, AnswerType::Expression},
        // simplification
        {"x/x", "1", true, AnswerType::Expression},
        {"x+0", "x", true, AnswerType::Expression},
        {"1 x", "x", true, AnswerType::Expression},
        {"x-x", "0", true, AnswerType::Expression},
        {"2x/2", "x", true, AnswerType::Expression},
        {"x^0", "1", true, AnswerType::Expression},
        {"x^1", "x", true, AnswerType::Expression},
        {"\\frac{x^2}{x}", "x", true, AnswerType::Expression},
        // fraction and decimal forms
        {"1/2", "0.5", true, AnswerType::Expression},
        {"3/4", "0.75", true, AnswerType::Numeric},
        {"2/4", "1/2", true, AnswerType::Expression},
        {"0.125", "1/8", true, AnswerType::Numeric},
        {"\\frac{1}{3}", "0.3333", true, AnswerType::Numeric},  // rel_tol 1e-3
        {"\\frac{1}{3}", "0.34", false, AnswerType::Numeric},
        {"\\dfrac{a}{b}", "a/b", true, AnswerType::Expression},
        {"\\frac{a+b}{2}", "(a+b)/2", true, AnswerType::Expression},
        {"\\frac{1}{\\sqrt{2}}", "\\frac{\\sqrt{2}}{2}", true, AnswerType::Expression},
        // scientific notation
        {"5e2", "500", true, AnswerType::Numeric},
        {"1.5e-3", "0.0015", true, AnswerType::Numeric},
        {"3e8", "3.0e8", true, AnswerType::Numeric},
        {"6.62e-34", "6.63e-34", false, AnswerType::Numeric},
        {"2.998e8", "3e8", true, AnswerType::Numeric},  // within 1e-3 relative
        // functions, constants, roots
        {"\\sqrt{4}", "2", true, AnswerType::Expression},
        {"\\sqrt{x^2 y^2}", "x y", true, AnswerType::Expression},  // positive range
        {"\\sqrt{2}", "1.41421", true, AnswerType::Numeric},
        {"e^x", "\\exp(x)", true, AnswerType::Expression},
        {"\\sin^2 x", "sin(x)^2", false, AnswerType::Expression},  // \sin^2 unsupported: pred unparseable
        {"2 sin(x) cos(x)", "sin(2 x)", true, AnswerType::Expression},
        {"\\ln(x)", "ln(x)", true, AnswerType::Expression},
        {"2\\pi", "6.2832", true, AnswerType::Numeric},
        // physics-flavored symbolic forms
        {"\\dfrac{S_c A}{2}", "S_c*A/2", true, AnswerType::Expression},
        {"\\dfrac{A}{4 \\rho g}", "A/(4*rho*g)", true, AnswerType::Expression},
        {"\\dfrac{S_c A^2}{2 \\rho g}", "S_c A^2 / (2 \\rho g)", true, AnswerType::Expression},
        {"\\frac{m v^2}{2}", "0.5 m v^2", true, AnswerType::Expression},
        {"\\frac{G M m}{r^2}", "G M m r^{-2}", true, AnswerType::Expression},
        {"\\frac{1}{2} k x^2", "k x^2 / 2", true, AnswerType::Expression},
        {"m g h", "g h m", true, AnswerType::Expression},
        {"\\frac{q_1 q_2}{4 \\pi \\epsilon_0 r^2}", "q_1 q_2/(4 pi epsilon_0 r^2)", true,
         AnswerType::Expression},
        // assignments stripped
        {"F = m a", "m a", true, AnswerType::Expression},
        {"E_k = \\frac{m v^2}{2}", "m v^2/2", true, AnswerType::Expression},
        // negatives: close but wrong
        {"x+1", "x", false, AnswerType::Expression},
        {"a-b", "b-a", false, AnswerType::Expression},
        {"x^2", "x^3", false, AnswerType::Expression},
        {"\\frac{a}{b}", "\\frac{b}{a}", false, AnswerType::Expression},
        {"2x", "3x", false, AnswerType::Expression},
        {"\\sqrt{x}", "x", false, AnswerType::Expression},
        {"19.8", "19.9", false, AnswerType::Numeric},
        {"sin(x)", "cos(x)", false, AnswerType::Expression},
        {"m g", "m/g", false, AnswerType::Expression},
        {"x y", "x+y", false, AnswerType::Expression},
        {"1/137", "1/138", false, AnswerType::Numeric},
        {"e^x", "e^{2x}", false, AnswerType::Expression},
        {"x", "y", false, AnswerType::Expression},
    };
    int n = 0;
    for (const auto& p : corpus) {
        CAPTURE(std::string(p.pred));
        CAPTURE(std::string(p.gold));
        CHECK(equivalent(p.pred, gold(p.gold, p.type), cfg) == p.want);
        ++n;
    }
    CHECK(n >= 60);
}

TEST_CASE("equivalent: reflexive and symmetric properties") {
    EquivConfig cfg;
    const char* exprs[] = {"x",         "a+b",      "\\frac{1}{2}", "\\sqrt{x}",
                           "2\\pi r",   "x^2 - 1",  "sin(x)",       "19.8",
                           "S_c A / 2", "e^x + 1"};
    for (const char* s : exprs) {
        CAPTURE(s);
        CHECK(equivalent(s, gold(s), cfg));  // reflexive
    }
    for (const char* a : exprs)
        for (const char* b : exprs) {
            bool ab = equivalent(a, gold(b), cfg);
            bool ba = equivalent(b, gold(a), cfg);
            CHECK(ab == ba);  // symmetric when both parse
        }
}

TEST_CASE("canonical equality implies probe equality (soundness spot-check)") {
    Rng rng(313);
    EquivConfig cfg;
    cfg.seed = 17;
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        ExprPtr e = random_expr(rng, 3);
        ExprPtr variant = shuffled(e, rng);
        ExprPtr c1, c2;
        try {
            c1 = canonicalize(e);
            c2 = canonicalize(variant);
        } catch (const CanonicalBlowup&) {
            continue;
        }
        if (!equal(c1, c2)) continue;
        bool agree = false;
        try {
            agree = numeric_probe_equal(e, variant, cfg);
        } catch (const ProbeDomainError&) {
            continue;  // nothing probeable on the range
        }
        CHECK(agree);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("render round-trips through the parser") {
    Rng rng(555);
    EquivConfig cfg;
    for (int i = 0; i < 200; ++i) {
        ExprPtr e = random_expr(rng, 3);
        ExprPtr c;
        try {
            c = canonicalize(e);
        } catch (const CanonicalBlowup&) {
            continue;
        }
        std::string text = render(c);
        CAPTURE(text);
        ExprPtr back;
        REQUIRE_NOTHROW(back = parse_expr(text));
        CHECK(equal(canonicalize(back), c));
    }
}

TEST_CASE("units audit") {
    CHECK(units_match("m", "m"));
    CHECK(units_match(" m / s ", "m/s"));
    CHECK(units_match("\\text{mJ}", "mJ"));
    CHECK(units_match("\\mathrm{kg}", "kg"));
    CHECK_FALSE(units_match("mJ", "J"));
    CHECK(units_match("", ""));
}

TEST_CASE("split_elements") {
    CHECK(split_elements("(1, 2)") == std::vector<std::string>{"1", "2"});
    CHECK(split_elements("1; 2; 3") == std::vector<std::string>{"1", "2", "3"});
    CHECK(split_elements("(f(a, b), c)") == std::vector<std::string>{"f(a, b)", "c"});
    CHECK(split_elements("[0.25, 4.0]") == std::vector<std::string>{"0.25", "4.0"});
    CHECK(split_elements("x") == std::vector<std::string>{"x"});
}

TEST_SUITE_END();
