#pragma once

#include <string>
#include <vector>

namespace physrl::boxparse {

/// Result of scanning a generation for \boxed{...} spans.
struct Extraction {
    std::vector<std::string> boxes;          // contents in document order
    bool trailing_text_after_last_box = false;
    bool truncated = false;                  // generation ended mid-box
};

/// Total function over arbitrary byte strings: collects every \boxed{...}
/// occurrence, matching nested braces by depth counting. Escaped braces
/// (\{ \}) do not change depth. An unterminated final box sets `truncated`
/// and is excluded. Scanning resumes after each closing brace, so a box
/// nested inside another box's content is not reported separately.
Extraction extract_boxes(const std::string& text);

/// "F_s^* = \dfrac{S_c A}{2}"  →  "\dfrac{S_c A}{2}".
/// When the box starts with a decorated identifier followed by a top-depth
/// '=' (or \approx), the right-hand side is returned; otherwise the input
/// comes back unchanged. "a = b = c" splits at the leftmost '='.
std::string strip_assignment(const std::string& box);

}  // namespace physrl::boxparse
