#include <cctype>

#include "physrl/boxparse.hpp"

namespace physrl::boxparse {

namespace {

bool all_whitespace(const std::string& s, std::size_t from) {
    for (std::size_t i = from; i < s.size(); ++i)
        if (!std::isspace(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\n\r");
    std::size_t e = s.find_last_not_of(" \t\n\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

/// True when `s` is exactly one identifier with decorations: optional
/// backslash command or letter run, then any mix of subscripts (_c, _{tot}),
/// star/prime superscripts (^*, ^{\star}, ^\prime) and primes.
bool is_decorated_identifier(const std::string& s) {
    std::size_t i = 0;
    auto letters = [&]() {
        std::size_t n = 0;
        while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i, ++n;
        return n;
    };
    if (i < s.size() && s[i] == '\\') ++i;
    if (letters() == 0) return false;
    while (i < s.size()) {
        char c = s[i];
        if (c == '\'') {
            ++i;
            continue;
        }
        if (c == '_') {
            ++i;
            if (i < s.size() && s[i] == '{') {
                int depth = 0;
                while (i < s.size()) {
                    if (s[i] == '{') ++depth;
                    if (s[i] == '}' && --depth == 0) {
                        ++i;
                        break;
                    }
                    ++i;
                }
                if (depth != 0) return false;
            } else {
                if (i < s.size() && s[i] == '\\') ++i;
                std::size_t n = 0;
                while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i, ++n;
                if (n == 0) return false;
            }
            continue;
        }
        if (c == '^') {
            ++i;
            std::string sup;
            if (i < s.size() && s[i] == '{') {
                int depth = 0;
                std::size_t start = i;
                while (i < s.size()) {
                    if (s[i] == '{') ++depth;
                    if (s[i] == '}' && --depth == 0) {
                        ++i;
                        break;
                    }
                    ++i;
                }
                if (depth != 0) return false;
                sup = s.substr(start + 1, i - start - 2);
            } else if (i < s.size() && s[i] == '\\') {
                std::size_t start = i++;
                while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
                sup = s.substr(start, i - start);
            } else if (i < s.size()) {
                sup = s.substr(i, 1);
                ++i;
            }
            sup = trim(sup);
            if (sup != "*" && sup != "\\star" && sup != "\\ast" && sup != "\\prime" &&
                sup != "'")
                return false;
            continue;
        }
        return false;
    }
    return true;
}

}  // namespace

Extraction extract_boxes(const std::string& text) {
    Extraction out;
    std::size_t pos = 0;
    std::size_t last_end = std::string::npos;
    const std::string marker = "\\boxed";

    while (true) {
        std::size_t hit = text.find(marker, pos);
        if (hit == std::string::npos) break;
        std::size_t j = hit + marker.size();
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j >= text.size() || text[j] != '{') {
            pos = hit + marker.size();
            continue;
        }
        int depth = 0;
        std::size_t content_start = 0;
        bool closed = false;
        std::size_t k = j;
        while (k < text.size()) {
            char c = text[k];
            if (c == '\\' && k + 1 < text.size()) {
                k += 2;  // escaped brace or command head: no depth change
                continue;
            }
            if (c == '{') {
                if (++depth == 1) content_start = k + 1;
            } else if (c == '}') {
                if (--depth == 0) {
                    out.boxes.push_back(text.substr(content_start, k - content_start));
                    last_end = k + 1;
                    pos = k + 1;
                    closed = true;
                    break;
                }
            }
            ++k;
        }
        if (!closed) {
            out.truncated = true;  // unterminated final box, excluded
            break;
        }
    }

    if (!out.boxes.empty() && last_end != std::string::npos)
        out.trailing_text_after_last_box = !all_whitespace(text, last_end);
    return out;
}

std::string strip_assignment(const std::string& box) {
    int depth = 0;
    const std::string approx = "\\approx";
    for (std::size_t i = 0; i < box.size(); ++i) {
        char c = box[i];
        if (c == '\\') {
            if (box.compare(i, approx.size(), approx) == 0 && depth == 0) {
                if (is_decorated_identifier(trim(box.substr(0, i))))
                    return trim(box.substr(i + approx.size()));
                return box;
            }
            ++i;  // skip escaped char / command head
            continue;
        }
        if (c == '{' || c == '(' || c == '[') ++depth;
        if (c == '}' || c == ')' || c == ']') --depth;
        if (c == '=' && depth == 0) {
            if (is_decorated_identifier(trim(box.substr(0, i))))
                return trim(box.substr(i + 1));
            return box;
        }
    }
    return box;
}

}  // namespace physrl::boxparse
