#include "ctxpolicy/fetch.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

std::string ParsedUrl::origin() const {
    const bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
    return scheme + "://" + host + (default_port ? "" : ":" + std::to_string(port));
}

std::string ParsedUrl::str() const { return origin() + path; }

bool looks_like_url(std::string_view source) {
    const auto lower = text::to_lower(source.substr(0, 8));
    return lower.starts_with("http://") || lower.starts_with("https://");
}

ParsedUrl parse_url(std::string_view url) {
    ParsedUrl out;
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) throw FetchError(FetchFailure::BadUrl, "not a URL: " + std::string(url));
    out.scheme = text::to_lower(url.substr(0, sep));
    if (out.scheme != "http" && out.scheme != "https")
        throw FetchError(FetchFailure::BadUrl, "unsupported URL scheme: " + std::string(url));
    auto rest = url.substr(sep + 3);
    const auto slash = rest.find_first_of("/?#");
    auto authority = rest.substr(0, slash);
    out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (!out.path.empty() && out.path.front() != '/') out.path.insert(out.path.begin(), '/');
    if (const auto hash = out.path.find('#'); hash != std::string::npos) out.path.resize(hash);
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    out.port = out.scheme == "https" ? 443 : 80;
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        const auto port_str = authority.substr(colon + 1);
        int port = 0;
        for (char c : port_str) {
            if (c < '0' || c > '9') throw FetchError(FetchFailure::BadUrl, "bad port in URL: " + std::string(url));
            port = port * 10 + (c - '0');
            if (port > 65535) throw FetchError(FetchFailure::BadUrl, "bad port in URL: " + std::string(url));
        }
        if (!port_str.empty()) out.port = port;
        authority = authority.substr(0, colon);
    }
    out.host = std::string(authority);
    if (out.host.empty()) throw FetchError(FetchFailure::BadUrl, "URL has no host: " + std::string(url));
    return out;
}

namespace {

std::string resolve_location(const ParsedUrl& base, const std::string& location) {
    if (looks_like_url(location)) return location;
    if (location.starts_with("//")) return base.scheme + ":" + location;
    if (location.starts_with("/")) return base.origin() + location;
    auto dir = base.path.substr(0, base.path.find('?'));
    dir = dir.substr(0, dir.rfind('/') + 1);
    return base.origin() + dir + location;
}

FetchResult read_file(std::string_view path) {
    std::ifstream in(std::string(path), std::ios::binary);
    if (!in) throw InputError("cannot read policy file " + std::string(path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return {ss.str(), std::string(path), 0};
}

}  // namespace

FetchResult fetch_policy(std::string_view source, std::chrono::milliseconds timeout, int max_redirects) {
    if (!looks_like_url(source)) {
        auto path = source;
        if (path.starts_with("file://")) path.remove_prefix(7);
        return read_file(path);
    }

    std::string current(source);
    for (int hop = 0;; ++hop) {
        const auto url = parse_url(current);
        httplib::Client client(url.origin());
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        client.set_follow_location(false);

        const auto started = std::chrono::steady_clock::now();
        auto res = client.Get(url.path);
        if (!res) {
            const auto err = res.error();
            const auto elapsed = std::chrono::steady_clock::now() - started;
            const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                   (err == httplib::Error::Read && elapsed >= timeout * 9 / 10);
            if (timed_out)
                throw FetchError(FetchFailure::Timeout, "timed out fetching " + current);
            throw FetchError(FetchFailure::Network,
                             "network error fetching " + current + ": " + httplib::to_string(err));
        }
        const int status = res->status;
        if (status >= 300 && status < 400 && res->has_header("Location")) {
            if (hop >= max_redirects)
                throw FetchError(FetchFailure::TooManyRedirects,
                                 "more than " + std::to_string(max_redirects) + " redirects fetching " +
                                     std::string(source),
                                 status);
            current = resolve_location(url, res->get_header_value("Location"));
            continue;
        }
        if (status < 200 || status >= 300)
            throw FetchError(FetchFailure::HttpStatus,
                             "HTTP " + std::to_string(status) + " fetching " + current, status);
        return {res->body, url.str(), hop};
    }
}

}  // namespace ctxpolicy
