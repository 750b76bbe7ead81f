#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ctxpolicy::text {

/// A word token with byte offsets into the source and its lowercased form.
struct Token {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string norm;
};

/// Word characters are ASCII alphanumerics and every non-ASCII byte, so UTF-8
/// letters stay inside words. Everything else (punctuation, whitespace)
/// separates tokens.
inline bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<Token> tokenize(std::string_view s);

/// Token strings only.
std::vector<std::string> words(std::string_view s);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

std::string_view trim(std::string_view s);

/// Trim and collapse internal whitespace runs into one space.
std::string collapse_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> split_ws(std::string_view s);

}  // namespace ctxpolicy::text
