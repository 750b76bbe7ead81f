#include "ctxpolicy/taxonomy.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open taxonomy file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

Taxonomy Taxonomy::parse(std::string_view content, std::string_view origin) {
    Taxonomy tax;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            if (nl == content.size()) break;
            continue;
        }
        const auto tab = line.find('\t');
        const bool two_fields = tab != std::string_view::npos && line.find('\t', tab + 1) == std::string_view::npos;
        const auto child = two_fields ? text::trim(line.substr(0, tab)) : std::string_view{};
        const auto parent = two_fields ? text::trim(line.substr(tab + 1)) : std::string_view{};
        if (!two_fields || child.empty() || parent.empty()) {
            throw InputError(std::string(origin) + ":" + std::to_string(lineno) +
                             ": expected child<TAB>parent, got '" + std::string(line) + "'");
        }
        tax.add_edge(child, parent);
        if (nl == content.size()) break;
    }
    return tax;
}

std::size_t Taxonomy::intern(std::string_view term) {
    auto key = text::to_lower(term);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const std::size_t id = terms_.size();
    index_.emplace(key, id);
    terms_.push_back(std::move(key));
    adjacency_.emplace_back();
    return id;
}

void Taxonomy::add_edge(std::string_view a, std::string_view b) {
    const auto u = intern(a);
    const auto v = intern(b);
    if (u == v) return;
    auto& nu = adjacency_[u];
    if (std::find(nu.begin(), nu.end(), v) != nu.end()) return;
    nu.push_back(v);
    adjacency_[v].push_back(u);
    ++edges_;
}

std::optional<std::size_t> Taxonomy::node(std::string_view term) const {
    auto it = index_.find(text::to_lower(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Taxonomy::distance(std::string_view a, std::string_view b) const {
    const auto src = node(a);
    const auto dst = node(b);
    if (!src || !dst) return std::nullopt;
    if (*src == *dst) return 0;

    std::vector<std::size_t> dist(terms_.size(), SIZE_MAX);
    std::deque<std::size_t> queue{*src};
    dist[*src] = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        for (auto v : adjacency_[u]) {
            if (dist[v] != SIZE_MAX) continue;
            dist[v] = dist[u] + 1;
            if (v == *dst) return dist[v];
            queue.push_back(v);
        }
    }
    return std::nullopt;
}

double path_similarity(std::string_view a, std::string_view b, const Taxonomy& tax) {
    if (a == b) return 1.0;
    const auto d = tax.distance(a, b);
    if (!d) return 0.0;
    return 1.0 / (1.0 + double(*d));
}

}  // namespace ctxpolicy
