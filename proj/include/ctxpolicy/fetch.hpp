#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace ctxpolicy {

struct FetchResult {
    std::string body;
    std::string final_location;  // final URL after redirects, or the file path
    int redirects = 0;
};

struct ParsedUrl {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 0;
    std::string path;  // always begins with '/'

    std::string origin() const;
    std::string str() const;
};

/// Throws FetchError(BadUrl) on anything that is not an absolute http(s) URL.
ParsedUrl parse_url(std::string_view url);

bool looks_like_url(std::string_view source);

/// Reads a local file, or GETs a URL following at most `max_redirects`
/// redirects. Network failures, non-2xx statuses and timeouts raise distinct
/// FetchError kinds; nothing partial is returned.
FetchResult fetch_policy(std::string_view source, std::chrono::milliseconds timeout = std::chrono::seconds(30),
                         int max_redirects = 5);

}  // namespace ctxpolicy
