#include "ctxpolicy/present.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/geometry.hpp"
#include "ctxpolicy/html.hpp"

namespace ctxpolicy {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

std::string require_string(const json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_string()) throw InputError(std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::size_t require_index(const json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw InputError(std::string("field \"") + key + "\" must be a non-negative integer");
    return v.get<std::size_t>();
}

DataType require_type(const json& j, const char* key) {
    const auto s = require_string(j, key);
    auto t = parse_data_type(s);
    if (!t) throw InputError("unknown data type \"" + s + "\"");
    return *t;
}

}  // namespace

void sort_contexts(std::vector<Context>& contexts) {
    std::stable_sort(contexts.begin(), contexts.end(), [](const Context& a, const Context& b) {
        return std::tie(a.kind, a.bbox.y, a.bbox.x, a.bbox.h, a.bbox.w, a.data_type, a.evidence) <
               std::tie(b.kind, b.bbox.y, b.bbox.x, b.bbox.h, b.bbox.w, b.data_type, b.evidence);
    });
}

CppBundle assemble_bundle(std::string app_id, std::vector<ScreenshotEntry> screenshots, SegmentGroups groups,
                          BundleMeta meta) {
    std::sort(screenshots.begin(), screenshots.end(),
              [](const ScreenshotEntry& a, const ScreenshotEntry& b) { return a.screenshot_id < b.screenshot_id; });
    for (std::size_t i = 1; i < screenshots.size(); ++i) {
        if (screenshots[i].screenshot_id == screenshots[i - 1].screenshot_id)
            throw InputError("duplicate screenshot id " + screenshots[i].screenshot_id);
    }
    for (auto& s : screenshots) {
        for (auto& c : s.contexts) c.screenshot_id = s.screenshot_id;
        sort_contexts(s.contexts);
    }
    for (auto t : kAllDataTypes) groups[index_of(t)].data_type = t;
    return {std::move(app_id), std::move(screenshots), std::move(groups), std::move(meta)};
}

json to_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

json to_json(const Context& c) {
    return {{"bbox", to_json(c.bbox)},
            {"data_type", to_string(c.data_type)},
            {"evidence", c.evidence},
            {"kind", to_string(c.kind)},
            {"score", c.score},
            {"screenshot_id", c.screenshot_id}};
}

json to_json(const SegmentGroup& g) {
    json sentences = json::array();
    for (const auto& s : g.sentences) {
        sentences.push_back({{"section", s.section_idx},
                             {"paragraph", s.paragraph_idx},
                             {"start", s.char_start},
                             {"end", s.char_end},
                             {"text", s.text}});
    }
    json highlights = json::array();
    for (const auto& h : g.highlights) {
        highlights.push_back(
            {{"sentence", h.sentence}, {"start", h.char_start}, {"end", h.char_end}, {"kind", to_string(h.kind)}});
    }
    return {{"data_type", to_string(g.data_type)},
            {"fallback", g.fallback},
            {"text", g.text()},
            {"sentences", sentences},
            {"highlights", highlights}};
}

json to_json(const SegmentGroups& groups) {
    json out = json::array();
    for (const auto& g : groups) out.push_back(to_json(g));
    return out;
}

json to_json(const CppBundle& b) {
    json shots = json::array();
    for (const auto& s : b.screenshots) {
        json ctx = json::array();
        for (const auto& c : s.contexts) ctx.push_back(to_json(c));
        shots.push_back({{"screenshot_id", s.screenshot_id}, {"image", s.image_path}, {"contexts", ctx}});
    }
    json adapters = json::object();
    for (const auto& [role, desc] : b.meta.adapters) adapters[role] = desc;
    return {{"schema_version", kBundleSchemaVersion},
            {"app_id", b.app_id},
            {"screenshots", shots},
            {"groups", to_json(b.groups)},
            {"meta",
             {{"config", b.meta.config},
              {"adapters", adapters},
              {"tool_version", b.meta.tool_version},
              {"generated_at", b.meta.generated_at}}}};
}

BBox bbox_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw InputError("bbox must be an array [x,y,w,h]");
    std::array<int, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
        if (!j[k].is_number_integer()) throw InputError("bbox entries must be integers");
        v[k] = j[k].get<int>();
    }
    BBox b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) throw InputError("bbox must have non-negative origin and positive size");
    return b;
}

Context context_from_json(const json& j) {
    Context c;
    c.bbox = bbox_from_json(require(j, "bbox"));
    const auto kind = require_string(j, "kind");
    auto k = parse_context_kind(kind);
    if (!k) throw InputError("unknown context kind \"" + kind + "\"");
    c.kind = *k;
    c.data_type = require_type(j, "data_type");
    c.evidence = require_string(j, "evidence");
    if (j.contains("screenshot_id")) c.screenshot_id = require_string(j, "screenshot_id");
    if (j.contains("score")) {
        if (!j["score"].is_number()) throw InputError("score must be a number");
        c.score = j["score"].get<double>();
    }
    return c;
}

SegmentGroup group_from_json(const json& j) {
    SegmentGroup g;
    g.data_type = require_type(j, "data_type");
    const auto& fb = require(j, "fallback");
    if (!fb.is_boolean()) throw InputError("fallback must be a boolean");
    g.fallback = fb.get<bool>();
    for (const auto& s : require(j, "sentences")) {
        g.sentences.push_back({require_index(s, "section"), require_index(s, "paragraph"), require_index(s, "start"),
                               require_index(s, "end"), require_string(s, "text")});
    }
    for (const auto& h : require(j, "highlights")) {
        const auto kind = require_string(h, "kind");
        if (kind != "Keyword" && kind != "NounChunk") throw InputError("unknown highlight kind \"" + kind + "\"");
        HighlightSpan span{require_index(h, "sentence"), require_index(h, "start"), require_index(h, "end"),
                           kind == "Keyword" ? HighlightKind::Keyword : HighlightKind::NounChunk};
        if (span.sentence >= g.sentences.size()) throw InputError("highlight refers to a missing sentence");
        g.highlights.push_back(span);
    }
    if (g.fallback && !g.sentences.empty()) throw InputError("fallback group must not carry sentences");
    return g;
}

SegmentGroups groups_from_json(const json& j) {
    if (!j.is_array()) throw InputError("groups must be an array");
    auto groups = empty_groups();
    std::set<DataType> seen;
    for (const auto& gj : j) {
        auto g = group_from_json(gj);
        if (!seen.insert(g.data_type).second)
            throw InputError("duplicate group for " + std::string(to_string(g.data_type)));
        groups[index_of(g.data_type)] = std::move(g);
    }
    if (seen.size() != kDataTypeCount) throw InputError("bundle must contain exactly twelve groups");
    return groups;
}

CppBundle bundle_from_json(const json& j) {
    if (!j.is_object()) throw InputError("bundle must be a JSON object");
    if (j.contains("schema_version") && j["schema_version"] != kBundleSchemaVersion)
        throw InputError("unsupported bundle schema version " + j["schema_version"].dump());
    CppBundle b;
    b.app_id = require_string(j, "app_id");
    for (const auto& sj : require(j, "screenshots")) {
        ScreenshotEntry e;
        e.screenshot_id = require_string(sj, "screenshot_id");
        e.image_path = sj.contains("image") ? require_string(sj, "image") : std::string();
        for (const auto& cj : require(sj, "contexts")) {
            auto c = context_from_json(cj);
            c.screenshot_id = e.screenshot_id;
            e.contexts.push_back(std::move(c));
        }
        b.screenshots.push_back(std::move(e));
    }
    b.groups = groups_from_json(require(j, "groups"));
    if (j.contains("meta")) {
        const auto& m = j["meta"];
        if (m.contains("config")) b.meta.config = m["config"];
        if (m.contains("adapters") && m["adapters"].is_object()) {
            for (const auto& [role, desc] : m["adapters"].items()) b.meta.adapters[role] = desc.get<std::string>();
        }
        if (m.contains("tool_version")) b.meta.tool_version = require_string(m, "tool_version");
        if (m.contains("generated_at")) b.meta.generated_at = require_string(m, "generated_at");
    }
    return b;
}

std::string canonical_dump(const json& j) {
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::string render_sentence_html(const std::string& sentence, std::vector<std::pair<std::size_t, std::size_t>> ranges) {
    std::sort(ranges.begin(), ranges.end());
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (auto [b, e] : ranges) {
        e = std::min(e, sentence.size());
        if (b >= e) continue;
        if (!merged.empty() && b <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, e);
        } else {
            merged.emplace_back(b, e);
        }
    }
    std::string out;
    std::size_t pos = 0;
    for (auto [b, e] : merged) {
        out += html::escape(sentence.substr(pos, b - pos));
        out += "<strong>" + html::escape(sentence.substr(b, e - b)) + "</strong>";
        pos = e;
    }
    out += html::escape(sentence.substr(pos));
    return out;
}

std::string render_html(const CppBundle& bundle) {
    const auto palette = Palette::builtin();
    std::array<std::vector<const Context*>, kDataTypeCount> by_type;
    for (const auto& s : bundle.screenshots) {
        for (const auto& c : s.contexts) by_type[index_of(c.data_type)].push_back(&c);
    }

    std::ostringstream o;
    o << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>Contextual privacy policy: " << html::escape(bundle.app_id) << "</title>\n"
      << "<style>\n"
      << "body{font-family:sans-serif;max-width:52em;margin:2em auto;line-height:1.5;color:#222}\n"
      << "section{border-left:6px solid #888;padding:0.2em 1em;margin:1.5em 0}\n"
      << "ul.contexts{font-size:0.9em;color:#555}\n"
      << "p.fallback{font-style:italic;color:#a33}\n"
      << "</style>\n</head>\n<body>\n"
      << "<h1>Contextual privacy policy for " << html::escape(bundle.app_id) << "</h1>\n";

    bool any = false;
    for (auto t : kAllDataTypes) {
        const auto& ctx = by_type[index_of(t)];
        if (ctx.empty()) continue;
        any = true;
        const auto& g = bundle.group(t);
        o << "<section data-type=\"" << to_string(t) << "\" style=\"border-left-color:"
          << Palette::format_color(palette.rgb[index_of(t)]) << "\">\n"
          << "<h2>" << to_string(t) << "</h2>\n<ul class=\"contexts\">\n";
        for (const auto* c : ctx) {
            o << "<li>" << html::escape(c->screenshot_id) << ": " << to_string(c->kind) << " &ldquo;"
              << html::escape(c->evidence) << "&rdquo; at [" << c->bbox.x << ", " << c->bbox.y << ", " << c->bbox.w
              << ", " << c->bbox.h << "]</li>\n";
        }
        o << "</ul>\n";
        if (g.fallback) {
            o << "<p class=\"fallback\">" << html::escape(kFallbackText) << "</p>\n";
        } else {
            o << "<div class=\"segment\">\n";
            for (std::size_t i = 0; i < g.sentences.size(); ++i) {
                std::vector<std::pair<std::size_t, std::size_t>> ranges;
                for (const auto& h : g.highlights) {
                    if (h.sentence == i) ranges.emplace_back(h.char_start, h.char_end);
                }
                o << "<p>" << render_sentence_html(g.sentences[i].text, std::move(ranges)) << "</p>\n";
            }
            o << "</div>\n";
        }
        o << "</section>\n";
    }
    if (!any) o << "<p class=\"empty\">No privacy-related contexts were detected.</p>\n";
    o << "</body>\n</html>\n";
    return o.str();
}

Palette Palette::builtin() {
    return {{{
        {0xE6, 0x19, 0x4B},  // Name
        {0xF5, 0x82, 0x31},  // Birthday
        {0x91, 0x1E, 0xB4},  // Address
        {0x3C, 0xB4, 0x4B},  // Phone
        {0x43, 0x63, 0xD8},  // Email
        {0x46, 0x99, 0x90},  // Profile
        {0x9A, 0x63, 0x24},  // Contacts
        {0xE6, 0x00, 0x00},  // Location
        {0xF0, 0x32, 0xE6},  // Photos
        {0x80, 0x80, 0x00},  // Voices
        {0x00, 0x00, 0x75},  // FinancialInfo
        {0x42, 0xD4, 0xF4},  // SocialMedia
    }}};
}

std::array<std::uint8_t, 3> Palette::parse_color(const std::string& s) {
    auto hex = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw InputError("bad colour \"" + s + "\", expected #RRGGBB");
    };
    if (s.size() != 7 || s[0] != '#') throw InputError("bad colour \"" + s + "\", expected #RRGGBB");
    std::array<std::uint8_t, 3> out{};
    for (int i = 0; i < 3; ++i) out[std::size_t(i)] = std::uint8_t(hex(s[1 + 2 * i]) * 16 + hex(s[2 + 2 * i]));
    return out;
}

std::string Palette::format_color(const std::array<std::uint8_t, 3>& c) {
    static const char* digits = "0123456789ABCDEF";
    std::string out = "#";
    for (auto v : c) {
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xF]);
    }
    return out;
}

cv::Scalar Palette::bgr(DataType t) const {
    const auto& c = rgb[index_of(t)];
    return cv::Scalar(c[2], c[1], c[0]);
}

namespace {

constexpr int kLabelFont = cv::FONT_HERSHEY_PLAIN;
constexpr double kLabelScale = 1.0;
constexpr int kLabelPad = 2;

}  // namespace

cv::Rect overlay_label_rect(const BBox& box, DataType type, int width, int height) {
    int baseline = 0;
    const auto size = cv::getTextSize(std::string(to_string(type)), kLabelFont, kLabelScale, 1, &baseline);
    const int w = size.width + 2 * kLabelPad;
    const int h = size.height + baseline + 2 * kLabelPad;
    int y = box.y - h;
    if (y < 0) y = std::min(box.bottom(), height - h);
    int x = std::min(box.x, width - w);
    cv::Rect r(std::max(0, x), std::max(0, y), w, h);
    return r & cv::Rect(0, 0, width, height);
}

cv::Mat render_overlay(const cv::Mat& image, const std::vector<Context>& contexts, const Palette& palette,
                       const OverlayStyle& style, Diagnostics& diag) {
    cv::Mat out = image.clone();
    if (out.channels() == 1) cv::cvtColor(out, out, cv::COLOR_GRAY2BGR);
    for (const auto& c : contexts) {
        const auto clipped = clip(c.bbox, out.cols, out.rows);
        if (!clipped) {
            diag.warn("context box outside image skipped in overlay: " + c.screenshot_id);
            continue;
        }
        if (*clipped != c.bbox) diag.warn("context box clipped in overlay: " + c.screenshot_id);
        const auto& b = *clipped;
        const cv::Scalar color = palette.bgr(c.data_type);
        const int t = std::max(1, style.thickness);
        // Border drawn inside the box so nothing outside it changes.
        auto fill = [&](int x, int y, int w, int h) {
            if (w > 0 && h > 0) out(cv::Rect(x, y, w, h)) = color;
        };
        const int ty = std::min(t, b.h);
        const int tx = std::min(t, b.w);
        fill(b.x, b.y, b.w, ty);
        fill(b.x, b.bottom() - ty, b.w, ty);
        fill(b.x, b.y, tx, b.h);
        fill(b.right() - tx, b.y, tx, b.h);

        if (style.labels) {
            const auto r = overlay_label_rect(b, c.data_type, out.cols, out.rows);
            if (r.area() <= 0) continue;
            out(r) = color;
            int baseline = 0;
            const auto size = cv::getTextSize(std::string(to_string(c.data_type)), kLabelFont, kLabelScale, 1, &baseline);
            const double luminance = 0.299 * color[2] + 0.587 * color[1] + 0.114 * color[0];
            const cv::Scalar ink = luminance > 140 ? cv::Scalar(0, 0, 0) : cv::Scalar(255, 255, 255);
            cv::Mat roi = out(r);
            cv::putText(roi, std::string(to_string(c.data_type)), cv::Point(kLabelPad, kLabelPad + size.height),
                        kLabelFont, kLabelScale, ink, 1, cv::LINE_8);
        }
    }
    return out;
}

LackReport lack_of_disclosure_report(const CppBundle& bundle) {
    LackReport r;
    for (const auto& s : bundle.screenshots) {
        for (const auto& c : s.contexts) {
            if (!bundle.group(c.data_type).fallback) continue;
            r.contexts.push_back(c);
            ++r.counts[index_of(c.data_type)];
        }
    }
    return r;
}

nlohmann::json to_json(const LackReport& report) {
    json contexts = json::array();
    for (const auto& c : report.contexts) contexts.push_back(to_json(c));
    json counts = json::object();
    for (auto t : kAllDataTypes) {
        if (report.counts[index_of(t)] > 0) counts[std::string(to_string(t))] = report.counts[index_of(t)];
    }
    return {{"contexts", contexts}, {"counts", counts}, {"total", report.total()}};
}

}  // namespace ctxpolicy
