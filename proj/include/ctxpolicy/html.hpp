#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ctxpolicy::html {

/// Element or text node in a forgiving HTML tree. Nodes live in an arena
/// owned by Document and refer to each other by index.
struct Node {
    std::string tag;   // lowercase element name; empty for text nodes
    std::string text;  // decoded text for text nodes
    std::size_t parent = 0;
    std::vector<std::size_t> children;

    bool is_text() const { return tag.empty(); }
};

class Document {
public:
    /// Tolerant parse: unknown constructs are skipped, unclosed elements are
    /// closed implicitly. Invalid UTF-8 is replaced with U+FFFD. Content of
    /// script, style, noscript, template, svg, title and nav elements is
    /// dropped.
    static Document parse(std::string_view html);

    static constexpr std::size_t kRoot = 0;

    const Node& node(std::size_t i) const { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }

    /// Concatenated descendant text, whitespace-collapsed.
    std::string text_content(std::size_t i) const;

private:
    std::size_t append(std::size_t parent, Node n);
    void collect_text(std::size_t i, std::string& out) const;

    std::vector<Node> nodes_;
};

/// Replace invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view in);

/// Decode character references (&amp;, &#39;, &#x2019;, ...). Unknown named
/// references are kept literally.
std::string decode_entities(std::string_view in);

/// Escape &, <, >, " for embedding in markup.
std::string escape(std::string_view in);

}  // namespace ctxpolicy::html
