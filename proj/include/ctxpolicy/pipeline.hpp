#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxpolicy/config.hpp"
#include "ctxpolicy/context_detect.hpp"
#include "ctxpolicy/keywords.hpp"
#include "ctxpolicy/policy.hpp"
#include "ctxpolicy/present.hpp"
#include "ctxpolicy/taxonomy.hpp"

namespace ctxpolicy {

/// Screenshot id used throughout: the file name without its extension.
std::string screenshot_id_for(const std::filesystem::path& image);

/// Detection resources built from a run configuration. Owns the kNN model
/// that `resources.model` points to.
struct DetectionSetup {
    std::unique_ptr<KnnModel> model;
    DetectionResources resources;
};

/// Loads keywords (built-in when unset), trains the kNN model when an icon
/// model directory is set, and parses adapter specs.
DetectionSetup make_detection_setup(const RunConfig& cfg, Diagnostics& diag);

/// Runs detection on every screenshot with up to `jobs` threads. Results and
/// warnings come back in input order regardless of completion order; the
/// first failing screenshot (in input order) rethrows its error.
std::vector<ScreenshotEntry> detect_screenshots(const std::vector<std::filesystem::path>& images,
                                                const DetectionResources& res, int jobs, Diagnostics& diag);

struct PolicyResources {
    KeywordResource keywords = KeywordResource::builtin();
    Taxonomy taxonomy;
    std::optional<NbModel> nb;
    MatchConfig match;
};

PolicyResources make_policy_resources(const RunConfig& cfg);

/// Fetches (file or URL), parses and language-filters a policy. Sources
/// ending in .txt are plain text, everything else HTML.
PolicyDocument load_policy(std::string_view source, const RunConfig& cfg);

/// Twelve segment groups for a policy source. A policy without usable text
/// yields twelve fallback groups and a warning.
SegmentGroups extract_policy(std::string_view source, const PolicyResources& res, const RunConfig& cfg,
                             Diagnostics& diag);

/// Adapter descriptions keyed by role, plus the config snapshot and
/// timestamp. Reproducible runs record the Unix epoch.
BundleMeta make_meta(const RunConfig& cfg);

/// ISO-8601 UTC, second precision.
std::string utc_timestamp(bool epoch);

}  // namespace ctxpolicy
