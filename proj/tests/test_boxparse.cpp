#include <doctest.h>

#include "physrl/boxparse.hpp"
#include "physrl/common.hpp"

using namespace physrl;
using boxparse::extract_boxes;
using boxparse::strip_assignment;

TEST_SUITE_BEGIN("boxparse");

TEST_CASE("single box") {
    auto e = extract_boxes("The answer is \\boxed{42}.");
    REQUIRE(e.boxes.size() == 1);
    CHECK(e.boxes[0] == "42");
    CHECK(e.trailing_text_after_last_box);
    CHECK_FALSE(e.truncated);
}

TEST_CASE("four boxes from a full solution, in order") {
    std::string text =
        "derivation... \\boxed{F_s^* = \\dfrac{S_c A}{2}} more words "
        "\\boxed{X^* = \\dfrac{A}{4 \\rho g}} then "
        "\\boxed{W^* = \\dfrac{S_c A^2}{2 \\rho g}} finally "
        "\\boxed{W^* \\approx 19.8\\text{ mJ}}";
    auto e = extract_boxes(text);
    REQUIRE(e.boxes.size() == 4);
    CHECK(e.boxes[0] == "F_s^* = \\dfrac{S_c A}{2}");
    CHECK(e.boxes[1] == "X^* = \\dfrac{A}{4 \\rho g}");
    CHECK(e.boxes[2] == "W^* = \\dfrac{S_c A^2}{2 \\rho g}");
    CHECK(e.boxes[3] == "W^* \\approx 19.8\\text{ mJ}");
    CHECK_FALSE(e.trailing_text_after_last_box);
}

TEST_CASE("nested braces matched by depth") {
    auto e = extract_boxes("\\boxed{\\sqrt{a+{b}}}");
    REQUIRE(e.boxes.size() == 1);
    CHECK(e.boxes[0] == "\\sqrt{a+{b}}");
}

TEST_CASE("escaped braces do not change depth") {
    auto e = extract_boxes("\\boxed{a\\{b\\}c}");
    REQUIRE(e.boxes.size() == 1);
    CHECK(e.boxes[0] == "a\\{b\\}c");
}

TEST_CASE("unterminated final box sets truncated and is excluded") {
    auto e = extract_boxes("\\boxed{1} and \\boxed{\\frac{a}{b");
    REQUIRE(e.boxes.size() == 1);
    CHECK(e.boxes[0] == "1");
    CHECK(e.truncated);
}

TEST_CASE("no boxes at all") {
    auto e = extract_boxes("nothing to see");
    CHECK(e.boxes.empty());
    CHECK_FALSE(e.truncated);
    CHECK_FALSE(e.trailing_text_after_last_box);
}

TEST_CASE("marker without brace is skipped") {
    auto e = extract_boxes("\\boxed is a command; \\boxed{7} is a box");
    REQUIRE(e.boxes.size() == 1);
    CHECK(e.boxes[0] == "7");
}

TEST_CASE("whitespace between marker and brace") {
    auto e = extract_boxes("\\boxed {x+1}");
    REQUIRE(e.boxes.size() == 1);
    CHECK(e.boxes[0] == "x+1");
}

TEST_CASE("property: n balanced contents extract exactly") {
    Rng rng(2024);
    const std::string pieces[] = {"42", "\\frac{a}{b}", "x^{2}", "a\\{b\\}", "{inner}", "-1/3"};
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng.next_u64() % 6;
        std::string text;
        std::vector<std::string> want;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& c = pieces[rng.next_u64() % 6];
            want.push_back(c);
            text += "\\boxed{" + c + "}";
            if (rng.next_u64() % 2) text += " filler ";
        }
        auto e = extract_boxes(text);
        CHECK(e.boxes == want);
    }
}

TEST_CASE("property: concatenation stability") {
    Rng rng(99);
    const std::string chunks[] = {"\\boxed{1}", "text", "\\boxed{\\sqrt{2}} tail",
                                  "prefix \\boxed{a+b}", ""};
    for (int trial = 0; trial < 100; ++trial) {
        std::string s1 = chunks[rng.next_u64() % 5];
        std::string s2 = chunks[rng.next_u64() % 5];
        auto left = extract_boxes(s1);
        if (left.truncated) continue;  // property premise: no unterminated box in s1
        auto right = extract_boxes(s2);
        auto both = extract_boxes(s1 + s2);
        std::vector<std::string> want = left.boxes;
        want.insert(want.end(), right.boxes.begin(), right.boxes.end());
        CHECK(both.boxes == want);
    }
}

TEST_CASE("fuzz: never throws on random bytes") {
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        std::size_t len = rng.next_u64() % 64;
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            // bias toward structural characters to hit the scanner paths
            const char alphabet[] = "\\{}boxed 123a^_";
            s.push_back(alphabet[rng.next_u64() % (sizeof(alphabet) - 1)]);
        }
        CHECK_NOTHROW(extract_boxes(s));
    }
}

TEST_CASE("strip_assignment: decorated identifiers") {
    CHECK(strip_assignment("F_s^* = \\dfrac{S_c A}{2}") == "\\dfrac{S_c A}{2}");
    CHECK(strip_assignment("X^* = \\dfrac{A}{4 \\rho g}") == "\\dfrac{A}{4 \\rho g}");
    CHECK(strip_assignment("W' = 3") == "3");
    CHECK(strip_assignment("v_{max} = 2 c") == "2 c");
    CHECK(strip_assignment("\\rho = m/V") == "m/V");
    CHECK(strip_assignment("T_1^{\\star} = 300") == "300");
}

TEST_CASE("strip_assignment: non-identifiers left alone") {
    CHECK(strip_assignment("42") == "42");
    CHECK(strip_assignment("x+y = z") == "x+y = z");
    CHECK(strip_assignment("2 = 2") == "2 = 2");
    CHECK(strip_assignment("\\frac{a}{b} = c") == "\\frac{a}{b} = c");
}

TEST_CASE("strip_assignment: leftmost top-level split") {
    CHECK(strip_assignment("a = b = c") == "b = c");
}

TEST_CASE("strip_assignment: equals inside braces is not top-level") {
    CHECK(strip_assignment("f_{x=0}") == "f_{x=0}");
}

TEST_CASE("strip_assignment: approx separator") {
    CHECK(strip_assignment("W^* \\approx 19.8\\text{ mJ}") == "19.8\\text{ mJ}");
}

TEST_SUITE_END();
