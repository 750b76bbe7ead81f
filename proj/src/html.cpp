#include "ctxpolicy/html.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "ctxpolicy/text.hpp"

namespace ctxpolicy::html {

namespace {

constexpr std::array<std::string_view, 14> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr",
};

// Elements whose whole content is discarded.
constexpr std::array<std::string_view, 8> kDroppedElements = {
    "script", "style", "noscript", "template", "svg", "title", "nav", "iframe",
};

// Opening one of these implicitly closes an open <p>.
constexpr std::array<std::string_view, 26> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "figure", "footer",
    "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "ol", "p", "pre",
    "section", "table", "ul", "li",
};

constexpr std::array<std::string_view, 20> kInlineElements = {
    "a",    "abbr", "b",     "bdi",  "cite", "code", "em",  "font", "i",     "label",
    "mark", "q",    "small", "span", "strong", "sub", "sup", "time", "u",    "s",
};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct NamedEntity {
    std::string_view name;
    std::uint32_t cp;
};

constexpr NamedEntity kNamedEntities[] = {
    {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},     {"apos", '\''},
    {"nbsp", 0xA0},    {"copy", 0xA9},     {"reg", 0xAE},      {"trade", 0x2122}, {"hellip", 0x2026},
    {"mdash", 0x2014}, {"ndash", 0x2013},  {"lsquo", 0x2018},  {"rsquo", 0x2019}, {"ldquo", 0x201C},
    {"rdquo", 0x201D}, {"bull", 0x2022},   {"middot", 0xB7},   {"laquo", 0xAB},   {"raquo", 0xBB},
    {"eacute", 0xE9},  {"egrave", 0xE8},   {"agrave", 0xE0},   {"ccedil", 0xE7},  {"uuml", 0xFC},
    {"ouml", 0xF6},    {"auml", 0xE4},     {"szlig", 0xDF},    {"euro", 0x20AC},  {"pound", 0xA3},
};

bool ieq_prefix(std::string_view s, std::size_t at, std::string_view prefix) {
    if (at + prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char c = s[at + i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != prefix[i]) return false;
    }
    return true;
}

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == ':' ||
           c == '_';
}

// Position just past the '>' closing a tag that starts at `lt`, honoring
// quoted attribute values.
std::size_t skip_tag(std::string_view s, std::size_t lt) {
    char quote = 0;
    for (std::size_t i = lt + 1; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            return i + 1;
        }
    }
    return s.size();
}

std::size_t find_ci(std::string_view s, std::size_t from, std::string_view needle) {
    for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
        if (ieq_prefix(s, i, needle)) return i;
    }
    return std::string_view::npos;
}

}  // namespace

std::string sanitize_utf8(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        const auto c = static_cast<unsigned char>(in[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
            continue;
        }
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        }
        bool ok = len != 0 && i + len <= in.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto cc = static_cast<unsigned char>(in[i + k]);
            if ((cc & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Reject overlongs, surrogates and out-of-range values.
        if (ok) {
            ok = !((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
                   cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF));
        }
        if (ok) {
            out.append(in.substr(i, len));
            i += len;
        } else {
            append_utf8(out, 0xFFFD);
            ++i;
        }
    }
    return out;
}

std::string decode_entities(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        if (in[i] != '&') {
            out.push_back(in[i++]);
            continue;
        }
        const auto semi = in.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(in[i++]);
            continue;
        }
        const auto body = in.substr(i + 1, semi - i - 1);
        bool decoded = false;
        if (body.size() >= 2 && body[0] == '#') {
            std::uint32_t cp = 0;
            bool valid = true;
            const bool hex = body[1] == 'x' || body[1] == 'X';
            const auto digits = body.substr(hex ? 2 : 1);
            valid = !digits.empty();
            for (char d : digits) {
                std::uint32_t v = 0;
                if (d >= '0' && d <= '9') v = std::uint32_t(d - '0');
                else if (hex && d >= 'a' && d <= 'f') v = std::uint32_t(d - 'a' + 10);
                else if (hex && d >= 'A' && d <= 'F') v = std::uint32_t(d - 'A' + 10);
                else { valid = false; break; }
                cp = cp * (hex ? 16 : 10) + v;
                if (cp > 0x10FFFF) cp = 0x110000;
            }
            if (valid) {
                append_utf8(out, cp);
                decoded = true;
            }
        } else {
            for (const auto& e : kNamedEntities) {
                if (e.name == body) {
                    append_utf8(out, e.cp);
                    decoded = true;
                    break;
                }
            }
        }
        if (decoded) {
            i = semi + 1;
        } else {
            out.push_back(in[i++]);
        }
    }
    return out;
}

std::string escape(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    for (char c : in) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::size_t Document::append(std::size_t parent, Node n) {
    n.parent = parent;
    nodes_.push_back(std::move(n));
    const std::size_t id = nodes_.size() - 1;
    nodes_[parent].children.push_back(id);
    return id;
}

Document Document::parse(std::string_view raw) {
    const std::string clean = sanitize_utf8(raw);
    const std::string_view s = clean;

    Document doc;
    doc.nodes_.push_back(Node{"#root", {}, 0, {}});
    std::vector<std::size_t> stack{kRoot};

    auto close_through = [&](std::string_view tag, std::initializer_list<std::string_view> barriers) {
        for (std::size_t k = stack.size(); k-- > 1;) {
            const auto& t = doc.nodes_[stack[k]].tag;
            if (t == tag) {
                stack.resize(k);
                return;
            }
            if (std::find(barriers.begin(), barriers.end(), t) != barriers.end()) return;
        }
    };

    std::size_t i = 0;
    std::string pending;
    auto flush_text = [&] {
        if (pending.empty()) return;
        doc.append(stack.back(), Node{{}, decode_entities(pending), 0, {}});
        pending.clear();
    };

    while (i < s.size()) {
        if (s[i] != '<') {
            pending.push_back(s[i++]);
            continue;
        }
        if (s.compare(i, 4, "<!--") == 0) {
            flush_text();
            const auto end = s.find("-->", i + 4);
            i = end == std::string_view::npos ? s.size() : end + 3;
            continue;
        }
        if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
            flush_text();
            i = skip_tag(s, i);
            continue;
        }
        const bool closing = i + 1 < s.size() && s[i + 1] == '/';
        std::size_t name_start = i + (closing ? 2 : 1);
        std::size_t name_end = name_start;
        while (name_end < s.size() && is_name_char(s[name_end])) ++name_end;
        if (name_end == name_start) {
            // A bare '<' in text.
            pending.push_back(s[i++]);
            continue;
        }
        flush_text();
        const std::string tag = text::to_lower(s.substr(name_start, name_end - name_start));
        const std::size_t after = skip_tag(s, i);
        const bool self_closing = after >= 2 && s[after - 2] == '/';
        i = after;

        if (closing) {
            if (tag == "br") {
                doc.append(stack.back(), Node{{}, " ", 0, {}});
                continue;
            }
            close_through(tag, {});
            continue;
        }

        if (contains(kDroppedElements, tag)) {
            if (self_closing) continue;
            const std::string end_tag = "</" + tag;
            const auto end = find_ci(s, i, end_tag);
            i = end == std::string_view::npos ? s.size() : skip_tag(s, end);
            continue;
        }

        if (contains(kClosesParagraph, tag)) close_through("p", {"div", "li", "td", "th", "section", "article", "body"});
        if (tag == "li") close_through("li", {"ul", "ol"});
        if (tag == "dt" || tag == "dd") {
            close_through("dt", {"dl"});
            close_through("dd", {"dl"});
        }
        if (tag == "tr") close_through("tr", {"table"});
        if (tag == "td" || tag == "th") {
            close_through("td", {"tr", "table"});
            close_through("th", {"tr", "table"});
        }

        if (tag == "br") {
            doc.append(stack.back(), Node{{}, " ", 0, {}});
            continue;
        }
        const std::size_t id = doc.append(stack.back(), Node{tag, {}, 0, {}});
        if (!self_closing && !contains(kVoidElements, tag)) stack.push_back(id);
    }
    flush_text();
    return doc;
}

void Document::collect_text(std::size_t i, std::string& out) const {
    const Node& n = nodes_[i];
    if (n.is_text()) {
        out += n.text;
        return;
    }
    // Block boundaries separate words even without whitespace in the source.
    const bool block = !contains(kInlineElements, n.tag);
    if (block) out.push_back(' ');
    for (auto c : n.children) collect_text(c, out);
    if (block) out.push_back(' ');
}

std::string Document::text_content(std::size_t i) const {
    std::string raw;
    collect_text(i, raw);
    // Non-breaking spaces count as whitespace.
    std::string unified;
    unified.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (static_cast<unsigned char>(raw[k]) == 0xC2 && k + 1 < raw.size() &&
            static_cast<unsigned char>(raw[k + 1]) == 0xA0) {
            unified.push_back(' ');
            ++k;
        } else {
            unified.push_back(raw[k]);
        }
    }
    return text::collapse_whitespace(unified);
}

}  // namespace ctxpolicy::html
