#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ctxpolicy/context_detect.hpp"
#include "ctxpolicy/policy.hpp"
#include "ctxpolicy/present.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

/// Every tunable of a run. Defaults, then a config file, then command-line
/// flags, each layer overriding the previous one.
struct RunConfig {
    LocalizerParams localizer;
    MatchConfig match;
    EvalConfig eval;
    int knn_k = 5;
    int knn_side = 32;
    std::chrono::seconds adapter_timeout{120};
    std::chrono::seconds fetch_timeout{30};
    int max_redirects = 5;
    Palette palette = Palette::builtin();
    OverlayStyle overlay;
    int jobs = 1;
    bool reproducible = false;

    std::optional<std::string> ocr_adapter;
    std::optional<std::string> text_adapter;
    std::optional<std::string> icon_adapter;

    std::optional<std::filesystem::path> keywords;
    std::optional<std::filesystem::path> taxonomy;
    std::optional<std::filesystem::path> heading_rules;
    std::optional<std::filesystem::path> nb_model;
    std::optional<std::filesystem::path> icon_model;

    /// Ranges of every threshold and existence of every named resource.
    /// Throws InputError.
    void validate() const;

    /// Settings recorded in bundle metadata. Resource paths appear by file
    /// name so that outputs do not depend on the working directory.
    nlohmann::json snapshot() const;
};

/// `key = value` lines, `#` comments and blank lines skipped. Duplicate keys
/// and lines without '=' are errors naming the line.
std::map<std::string, std::string> parse_config_text(std::string_view content, std::string_view origin);

/// Applies parsed settings. Relative resource paths resolve against
/// `base_dir`. Unknown keys and unparsable values throw InputError.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& values,
                  const std::filesystem::path& base_dir = {});

void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace ctxpolicy
