#include <cctype>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

#include "physrl/symcheck.hpp"

namespace physrl::sym {

namespace {

const std::unordered_set<std::string>& greek_names() {
    static const std::unordered_set<std::string> g = {
        "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
        "iota", "kappa", "lambda", "mu", "nu", "xi", "omicron", "rho", "sigma",
        "tau", "upsilon", "phi", "chi", "psi", "omega", "Gamma", "Delta",
        "Theta", "Lambda", "Xi", "Pi", "Sigma", "Upsilon", "Phi", "Psi",
        "Omega", "ell", "hbar"};
    return g;
}

// \varepsilon and friends normalize to the base letter.
std::string normalize_greek(const std::string& s) {
    if (s.size() > 3 && s.compare(0, 3, "var") == 0 && greek_names().count(s.substr(3)))
        return s.substr(3);
    return s;
}

struct Token {
    enum class T {
        Num, Var, Const, Func, Frac, Sqrt,
        Plus, Minus, Star, Slash, Caret, Underscore, Prime,
        LParen, RParen, LBracket, RBracket, LBrace, RBrace,
        End
    };
    T t;
    std::size_t pos = 0;
    std::string text;   // identifier / raw slice
    Number num;         // T::Num
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            Token tok = next();
            bool end = tok.t == Token::T::End;
            out.push_back(std::move(tok));
            if (end) break;
        }
        return out;
    }

  private:
    const std::string& src_;
    std::size_t i_ = 0;

    char peek() const { return i_ < src_.size() ? src_[i_] : '\0'; }

    Token simple(Token::T t) {
        Token tok{t, i_, {}, {}};
        ++i_;
        return tok;
    }

    Token next() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        if (i_ >= src_.size()) return Token{Token::T::End, i_, {}, {}};
        char c = src_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))))
            return lex_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return lex_name(i_);
        if (c == '\\') return lex_command();
        switch (c) {
            case '+': return simple(Token::T::Plus);
            case '-': return simple(Token::T::Minus);
            case '*': return simple(Token::T::Star);
            case '/': return simple(Token::T::Slash);
            case '^': return simple(Token::T::Caret);
            case '_': return simple(Token::T::Underscore);
            case '\'': return simple(Token::T::Prime);
            case '(': return simple(Token::T::LParen);
            case ')': return simple(Token::T::RParen);
            case '[': return simple(Token::T::LBracket);
            case ']': return simple(Token::T::RBracket);
            case '{': return simple(Token::T::LBrace);
            case '}': return simple(Token::T::RBrace);
            default:
                throw ExprSyntaxError(i_, std::string("a term, found '") + c + "'");
        }
    }

    Token lex_number() {
        std::size_t start = i_;
        std::string int_part, frac_part, exp_part;
        bool exp_neg = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) int_part.push_back(src_[i_++]);
        if (peek() == '.') {
            ++i_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) frac_part.push_back(src_[i_++]);
        }
        if ((peek() == 'e' || peek() == 'E') && i_ + 1 < src_.size()) {
            std::size_t save = i_;
            ++i_;
            if (peek() == '+' || peek() == '-') {
                exp_neg = peek() == '-';
                ++i_;
            }
            if (std::isdigit(static_cast<unsigned char>(peek()))) {
                while (std::isdigit(static_cast<unsigned char>(peek()))) exp_part.push_back(src_[i_++]);
            } else {
                i_ = save;  // "2e" is 2 * variable e
            }
        }
        Token tok{Token::T::Num, start, {}, {}};
        tok.num = make_literal(int_part, frac_part, exp_part, exp_neg,
                               src_.substr(start, i_ - start));
        return tok;
    }

    static Number make_literal(const std::string& int_part, const std::string& frac_part,
                               const std::string& exp_part, bool exp_neg,
                               const std::string& slice) {
        std::string digits = int_part + frac_part;
        std::size_t nz = digits.find_first_not_of('0');
        if (nz == std::string::npos) return Number::from_int(0);
        digits = digits.substr(nz);
        long net_exp = exp_part.empty() ? 0 : std::strtol(exp_part.c_str(), nullptr, 10);
        if (exp_neg) net_exp = -net_exp;
        net_exp -= static_cast<long>(frac_part.size());
        if (digits.size() <= 18) {
            std::int64_t mant = std::strtoll(digits.c_str(), nullptr, 10);
            auto pow10 = [](long e) -> std::optional<std::int64_t> {
                std::int64_t v = 1;
                for (long k = 0; k < e; ++k) {
                    if (v > INT64_MAX / 10) return std::nullopt;
                    v *= 10;
                }
                return v;
            };
            if (net_exp >= 0) {
                if (auto p = pow10(net_exp)) {
                    __int128 v = static_cast<__int128>(mant) * *p;
                    if (v <= INT64_MAX) return Number::from_int(static_cast<std::int64_t>(v));
                }
            } else if (auto p = pow10(-net_exp)) {
                if (auto r = Rational::make(mant, *p)) return Number::from_rat(*r);
            }
        }
        return Number::from_double(std::strtod(slice.c_str(), nullptr));
    }

    Token lex_name(std::size_t start) {
        std::string run;
        while (std::isalpha(static_cast<unsigned char>(peek()))) run.push_back(src_[i_++]);
        return classify_name(run, start);
    }

    Token classify_name(std::string run, std::size_t start) {
        run = normalize_greek(run);
        Token tok{Token::T::Var, start, run, {}};
        if (run == "pi" || run == "e") {
            tok.t = Token::T::Const;
        } else if (run == "sqrt") {
            tok.t = Token::T::Sqrt;
        } else if (is_known_func(run)) {
            tok.t = Token::T::Func;
        }
        return tok;
    }

    void skip_braced_group(const char* what) {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        if (peek() != '{') throw ExprSyntaxError(i_, std::string("'{' after \\") + what);
        int depth = 0;
        while (i_ < src_.size()) {
            char c = src_[i_++];
            if (c == '{') ++depth;
            if (c == '}' && --depth == 0) return;
        }
        throw ExprSyntaxError(src_.size(), "'}'");
    }

    Token lex_command() {
        std::size_t start = i_;
        ++i_;  // backslash
        if (i_ < src_.size() && !std::isalpha(static_cast<unsigned char>(src_[i_]))) {
            char c = src_[i_++];
            switch (c) {
                case '{': return Token{Token::T::LBrace, start, {}, {}};
                case '}': return Token{Token::T::RBrace, start, {}, {}};
                case ',': case ';': case ':': case '!': case ' ':
                    return next();
                default:
                    throw ExprSyntaxError(start, std::string("a command, found '\\") + c + "'");
            }
        }
        std::string name;
        while (std::isalpha(static_cast<unsigned char>(peek()))) name.push_back(src_[i_++]);
        if (name == "frac" || name == "dfrac" || name == "tfrac" || name == "cfrac")
            return Token{Token::T::Frac, start, {}, {}};
        if (name == "sqrt") return Token{Token::T::Sqrt, start, {}, {}};
        if (name == "pi") return Token{Token::T::Const, start, "pi", {}};
        if (is_known_func(name)) return Token{Token::T::Func, start, name, {}};
        if (name == "cdot" || name == "times") return Token{Token::T::Star, start, {}, {}};
        if (name == "div") return Token{Token::T::Slash, start, {}, {}};
        if (name == "left" || name == "right" || name == "quad" || name == "qquad" ||
            name == "displaystyle" || name == "limits")
            return next();
        if (name == "text" || name == "mathrm" || name == "mathit" || name == "mathbf" ||
            name == "mathcal" || name == "operatorname" || name == "textrm") {
            skip_braced_group(name.c_str());
            return next();
        }
        if (name == "prime" || name == "star" || name == "ast")
            return Token{Token::T::Prime, start, {}, {}};
        std::string norm = normalize_greek(name);
        if (greek_names().count(norm)) return Token{Token::T::Var, start, norm, {}};
        throw ExprSyntaxError(start, "a known command, found '\\" + name + "'");
    }
};

class Parser {
  public:
    Parser(const std::string& src, std::vector<Token> toks)
        : src_(src), toks_(std::move(toks)) {}

    ExprPtr run() {
        ExprPtr e = parse_sum();
        expect(Token::T::End, "end of expression");
        return e;
    }

  private:
    const std::string& src_;
    std::vector<Token> toks_;
    std::size_t i_ = 0;

    const Token& cur() const { return toks_[i_]; }
    bool at(Token::T t) const { return cur().t == t; }
    const Token& advance() { return toks_[i_++]; }

    void expect(Token::T t, const char* what) {
        if (!at(t)) throw ExprSyntaxError(cur().pos, what);
        ++i_;
    }

    bool starts_primary() const {
        switch (cur().t) {
            case Token::T::Num:
            case Token::T::Var:
            case Token::T::Const:
            case Token::T::Func:
            case Token::T::Frac:
            case Token::T::Sqrt:
            case Token::T::LParen:
            case Token::T::LBracket:
            case Token::T::LBrace:
                return true;
            default:
                return false;
        }
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_unary();
        std::vector<ExprPtr> terms{lhs};
        while (at(Token::T::Plus) || at(Token::T::Minus)) {
            bool minus = at(Token::T::Minus);
            ++i_;
            ExprPtr rhs = parse_unary();
            terms.push_back(minus ? make_neg(rhs) : rhs);
        }
        return terms.size() == 1 ? terms[0] : make_add(std::move(terms));
    }

    ExprPtr parse_unary() {
        if (at(Token::T::Minus)) {
            ++i_;
            return make_neg(parse_unary());
        }
        if (at(Token::T::Plus)) {
            ++i_;
            return parse_unary();
        }
        return parse_term();
    }

    // Multiplicative level: explicit * and /, plus juxtaposition.
    ExprPtr parse_term() {
        ExprPtr acc = parse_postfix();
        while (true) {
            if (at(Token::T::Star)) {
                ++i_;
                if (at(Token::T::Minus)) {  // a * -b
                    ++i_;
                    acc = make_mul({acc, make_neg(parse_postfix())});
                } else {
                    acc = make_mul({acc, parse_postfix()});
                }
            } else if (at(Token::T::Slash)) {
                ++i_;
                acc = make_div(acc, parse_postfix());
            } else if (starts_primary()) {
                acc = make_mul({acc, parse_postfix()});
            } else {
                break;
            }
        }
        return acc;
    }

    ExprPtr parse_postfix() {
        ExprPtr base = parse_primary();
        while (at(Token::T::Caret)) {
            ++i_;
            base = make_pow(base, parse_exponent());
        }
        return base;
    }

    ExprPtr parse_exponent() {
        if (at(Token::T::LBrace)) {
            ++i_;
            ExprPtr e = parse_sum();
            expect(Token::T::RBrace, "'}'");
            return e;
        }
        if (at(Token::T::Minus)) {
            ++i_;
            return make_neg(parse_exponent());
        }
        return parse_postfix();
    }

    ExprPtr parse_braced() {
        expect(Token::T::LBrace, "'{'");
        ExprPtr e = parse_sum();
        expect(Token::T::RBrace, "'}'");
        return e;
    }

    ExprPtr parse_func_arg() {
        if (at(Token::T::LBrace)) return parse_braced();
        if (at(Token::T::LParen)) {
            ++i_;
            ExprPtr e = parse_sum();
            expect(Token::T::RParen, "')'");
            return e;
        }
        if (!starts_primary())
            throw ExprSyntaxError(cur().pos, "a function argument");
        return parse_postfix();
    }

    ExprPtr parse_primary() {
        switch (cur().t) {
            case Token::T::Num: {
                const Token& t = advance();
                return make_number(t.num);
            }
            case Token::T::Const: {
                const Token& t = advance();
                return make_const(t.text == "pi" ? ConstName::Pi : ConstName::E);
            }
            case Token::T::Var:
                return parse_identifier();
            case Token::T::Func: {
                std::string name = advance().text;
                return make_func(name, parse_func_arg());
            }
            case Token::T::Sqrt: {
                ++i_;
                ExprPtr index;
                if (at(Token::T::LBracket)) {
                    ++i_;
                    index = parse_sum();
                    expect(Token::T::RBracket, "']'");
                }
                ExprPtr arg = parse_func_arg();
                if (index) return make_pow(arg, make_div(make_int(1), index));
                return make_func("sqrt", arg);
            }
            case Token::T::Frac: {
                ++i_;
                ExprPtr n = parse_braced();
                ExprPtr d = parse_braced();
                return make_div(n, d);
            }
            case Token::T::LParen: {
                ++i_;
                ExprPtr e = parse_sum();
                expect(Token::T::RParen, "')'");
                return e;
            }
            case Token::T::LBracket: {
                ++i_;
                ExprPtr e = parse_sum();
                expect(Token::T::RBracket, "']'");
                return e;
            }
            case Token::T::LBrace: {
                ++i_;
                ExprPtr e = parse_sum();
                expect(Token::T::RBrace, "'}'");
                return e;
            }
            default:
                throw ExprSyntaxError(cur().pos, "a value");
        }
    }

    // Identifier with optional subscript (_c, _{tot}, _12) and primes.
    ExprPtr parse_identifier() {
        std::string name = advance().text;
        if (at(Token::T::Underscore)) {
            ++i_;
            name += "_";
            name += parse_subscript_text();
        }
        while (at(Token::T::Prime)) {
            ++i_;
            name += "'";
        }
        return make_var(name);
    }

    std::string parse_subscript_text() {
        if (at(Token::T::LBrace)) {
            // raw slice between the braces, blanks and backslashes dropped
            std::size_t open = cur().pos;
            int depth = 0;
            std::size_t j = open;
            while (j < src_.size()) {
                if (src_[j] == '{') ++depth;
                if (src_[j] == '}' && --depth == 0) break;
                ++j;
            }
            if (j >= src_.size()) throw ExprSyntaxError(src_.size(), "'}'");
            std::string raw = src_.substr(open + 1, j - open - 1);
            std::string cleaned;
            for (char c : raw)
                if (!std::isspace(static_cast<unsigned char>(c)) && c != '\\' && c != '{' &&
                    c != '}')
                    cleaned.push_back(c);
            // resync token stream past the closing brace
            while (!at(Token::T::End) && cur().pos <= j) ++i_;
            return cleaned;
        }
        if (at(Token::T::Var) || at(Token::T::Const) || at(Token::T::Func)) return advance().text;
        if (at(Token::T::Num)) {
            const Token& t = advance();
            return t.num.str();
        }
        throw ExprSyntaxError(cur().pos, "a subscript");
    }
};

}  // namespace

ExprPtr parse_expr(const std::string& text) {
    Lexer lex(text);
    Parser parser(text, lex.run());
    return parser.run();
}

std::string normalize_unit(const std::string& u) {
    static const std::string wrappers[] = {"\\text", "\\mathrm", "\\textrm", "\\,",
                                           "\\;", "\\!"};
    std::string s = u;
    for (const auto& w : wrappers) {
        std::size_t p;
        while ((p = s.find(w)) != std::string::npos) s.erase(p, w.size());
    }
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c)) && c != '{' && c != '}' && c != '~')
            out.push_back(c);
    return out;
}

bool units_match(const std::string& a, const std::string& b) {
    return normalize_unit(a) == normalize_unit(b);
}

std::vector<std::string> split_elements(const std::string& text) {
    auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t\n\r");
        std::size_t e = s.find_last_not_of(" \t\n\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string body = trim(text);
    if (body.size() >= 2) {
        char open = body.front(), close = body.back();
        if ((open == '(' && close == ')') || (open == '[' && close == ']')) {
            // strip only if the pair encloses the whole string
            int depth = 0;
            bool whole = true;
            for (std::size_t i = 0; i < body.size(); ++i) {
                if (body[i] == '(' || body[i] == '[') ++depth;
                if (body[i] == ')' || body[i] == ']') {
                    --depth;
                    if (depth == 0 && i + 1 < body.size()) {
                        whole = false;
                        break;
                    }
                }
            }
            if (whole) body = trim(body.substr(1, body.size() - 2));
        }
    }
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if ((c == ',' || c == ';') && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace physrl::sym
