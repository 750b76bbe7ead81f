#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "ctxpolicy/policy.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

inline constexpr int kBundleSchemaVersion = 1;

struct ScreenshotEntry {
    std::string screenshot_id;
    std::string image_path;
    std::vector<Context> contexts;

    friend bool operator==(const ScreenshotEntry&, const ScreenshotEntry&) = default;
};

struct BundleMeta {
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::string> adapters;  // role -> adapter description
    std::string tool_version;
    std::string generated_at;  // ISO-8601 UTC; the epoch in reproducible runs

    friend bool operator==(const BundleMeta&, const BundleMeta&) = default;
};

struct CppBundle {
    std::string app_id;
    std::vector<ScreenshotEntry> screenshots;
    SegmentGroups groups = empty_groups();
    BundleMeta meta;

    const SegmentGroup& group(DataType t) const { return groups[index_of(t)]; }

    friend bool operator==(const CppBundle&, const CppBundle&) = default;
};

/// Canonical ordering: screenshots by id, contexts by kind then (y, x),
/// groups in data-type order. Contexts are linked to groups by data type
/// only. Throws InputError on duplicate screenshot ids.
CppBundle assemble_bundle(std::string app_id, std::vector<ScreenshotEntry> screenshots, SegmentGroups groups,
                          BundleMeta meta);

/// Orders contexts by kind, then (y, x), then the remaining fields.
void sort_contexts(std::vector<Context>& contexts);

// JSON interchange. Objects serialize with sorted keys; arrays keep the
// canonical orders above.
nlohmann::json to_json(const BBox& b);
nlohmann::json to_json(const Context& c);
nlohmann::json to_json(const SegmentGroup& g);
nlohmann::json to_json(const SegmentGroups& groups);
nlohmann::json to_json(const CppBundle& bundle);

BBox bbox_from_json(const nlohmann::json& j);
Context context_from_json(const nlohmann::json& j);
SegmentGroup group_from_json(const nlohmann::json& j);
SegmentGroups groups_from_json(const nlohmann::json& j);
CppBundle bundle_from_json(const nlohmann::json& j);

/// Two-space indented UTF-8 with a trailing LF.
std::string canonical_dump(const nlohmann::json& j);

/// Self-contained HTML report: one section per data type that has at least
/// one context, highlights in <strong>, fallback groups as the fallback
/// message.
std::string render_html(const CppBundle& bundle);

/// Sentence markup with merged highlight ranges wrapped in <strong>.
std::string render_sentence_html(const std::string& sentence, std::vector<std::pair<std::size_t, std::size_t>> ranges);

/// RGB colour per data type.
struct Palette {
    std::array<std::array<std::uint8_t, 3>, kDataTypeCount> rgb{};

    static Palette builtin();

    /// "#RRGGBB". Throws InputError otherwise.
    static std::array<std::uint8_t, 3> parse_color(const std::string& s);
    static std::string format_color(const std::array<std::uint8_t, 3>& c);

    cv::Scalar bgr(DataType t) const;
};

struct OverlayStyle {
    int thickness = 3;
    bool labels = true;
};

/// Where the label for `box` is drawn on a width x height image.
cv::Rect overlay_label_rect(const BBox& box, DataType type, int width, int height);

/// Copy of `image` with a rectangle border (drawn inside the box) and a
/// data-type label per context, in context order. Boxes reaching outside the
/// image are clipped with a warning.
cv::Mat render_overlay(const cv::Mat& image, const std::vector<Context>& contexts, const Palette& palette,
                       const OverlayStyle& style, Diagnostics& diag);

struct LackReport {
    std::vector<Context> contexts;
    std::array<std::size_t, kDataTypeCount> counts{};

    std::size_t total() const { return contexts.size(); }
};

/// Contexts whose data type only has the fallback segment.
LackReport lack_of_disclosure_report(const CppBundle& bundle);

nlohmann::json to_json(const LackReport& report);

}  // namespace ctxpolicy
