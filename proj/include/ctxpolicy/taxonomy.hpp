#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctxpolicy {

/// Undirected hypernym/hyponym graph over lowercase surface terms. One node
/// per term; word senses are collapsed.
class Taxonomy {
public:
    /// Parses `child<TAB>parent` lines. Blank lines and `#` comments are
    /// ignored; duplicate edges collapse. Throws InputError naming the line on
    /// malformed input.
    static Taxonomy load(const std::filesystem::path& path);
    static Taxonomy parse(std::string_view content, std::string_view origin = "<memory>");

    /// Adds an undirected edge. Self-loops are ignored.
    void add_edge(std::string_view a, std::string_view b);

    std::optional<std::size_t> node(std::string_view term) const;

    std::size_t node_count() const { return terms_.size(); }
    std::size_t edge_count() const { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t node) const { return adjacency_[node]; }
    const std::string& term(std::size_t node) const { return terms_[node]; }

    /// Unweighted shortest path length, nullopt when disconnected or absent.
    std::optional<std::size_t> distance(std::string_view a, std::string_view b) const;

private:
    std::size_t intern(std::string_view term);

    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> terms_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::size_t edges_ = 0;
};

/// 1.0 for identical strings, 1/(1+d) for connected terms at distance d,
/// otherwise 0.0.
double path_similarity(std::string_view a, std::string_view b, const Taxonomy& tax);

}  // namespace ctxpolicy
