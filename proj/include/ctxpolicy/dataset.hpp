#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxpolicy/present.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

/// Ground-truth segment for one data type. An empty sentence list with
/// fallback set stands for "FALLBACK".
struct SegmentTruth {
    bool fallback = true;
    std::vector<std::string> sentences;

    friend bool operator==(const SegmentTruth&, const SegmentTruth&) = default;
};

struct ScreenshotRecord {
    std::string id;  // file stem
    std::filesystem::path path;
    int width = 0;
    int height = 0;

    friend bool operator==(const ScreenshotRecord&, const ScreenshotRecord&) = default;
};

struct AppRecord {
    std::string app_id;
    std::filesystem::path policy_path;
    std::vector<ScreenshotRecord> screenshots;  // by id
    std::vector<Context> contexts;              // in file order, screenshot_id set
    std::map<DataType, SegmentTruth> segments;

    const ScreenshotRecord* screenshot(const std::string& id) const;

    friend bool operator==(const AppRecord&, const AppRecord&) = default;
};

/// Parses JSON, rejecting duplicate object keys. Errors carry `file` and
/// the offending location.
nlohmann::json parse_json_strict(const std::string& content, const std::string& file);

/// `<dir>/policy.html|policy.txt`, `<dir>/screenshots/*.png|*.jpg|*.jpeg`,
/// `<dir>/annotations.json`. Annotations reference screenshots by file name.
AppRecord load_app(const std::filesystem::path& dir);

/// Every app directory under `root`, ordered by app id.
std::vector<AppRecord> load_dataset(const std::filesystem::path& root);

nlohmann::json annotations_to_json(const AppRecord& record);

/// Copies the policy and screenshots and writes annotations.json so that
/// load_app(out) reproduces `record` up to paths.
void write_app(const AppRecord& record, const std::filesystem::path& out);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

void write_bundle(const CppBundle& bundle, const std::filesystem::path& out);
CppBundle read_bundle(const std::filesystem::path& path);

}  // namespace ctxpolicy
