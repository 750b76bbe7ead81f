#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

enum class AdapterRole { Ocr, TextClassifier, IconClassifier };

std::string_view to_string(AdapterRole r);

/// An external executable speaking the one-shot JSON protocol: one request
/// object on stdin, one response object on stdout.
struct AdapterSpec {
    std::string executable;
    std::vector<std::string> args;
    AdapterRole role = AdapterRole::Ocr;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);

    /// "path arg1 arg2 ..." split on whitespace.
    static AdapterSpec parse(std::string_view spec, AdapterRole role);

    /// Human-readable identifier recorded in bundle metadata.
    std::string describe() const;
};

inline constexpr int kAdapterProtocolVersion = 1;

struct ProcessResult {
    int exit_code = -1;
    std::string out;
};

/// Runs argv[0] with the given arguments, feeding `input` on stdin and
/// capturing stdout. stderr is inherited. Throws AdapterError when the
/// executable cannot be launched or the deadline passes.
ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input,
                          std::chrono::milliseconds timeout);

/// Resolves the executable (PATH lookup when it has no slash). Throws
/// AdapterError when it is missing or not executable.
std::string resolve_executable(const std::string& name);

/// Sends one request and returns the parsed response object. Non-zero exit,
/// non-JSON output and non-object output all raise AdapterError carrying the
/// offending payload.
nlohmann::json invoke_adapter(const AdapterSpec& spec, const nlohmann::json& request);

// Wire requests. The payload fields sit next to "role" and "version".
nlohmann::json make_ocr_request(const std::string& image_path);
nlohmann::json make_text_classifier_request(const std::string& text);
nlohmann::json make_icon_classifier_request(const std::string& image_path, const std::vector<std::string>& classes);

struct WireRegion {
    BBox bbox;  // unclipped, as reported
    std::string text;
    double confidence = 0.0;
};

struct WireIconClass {
    std::optional<std::string> class_name;
    double score = 0.0;
};

// Response validation; schema violations raise AdapterError with the payload.
std::vector<WireRegion> parse_ocr_response(const nlohmann::json& response);
std::optional<DataType> parse_text_classifier_response(const nlohmann::json& response);
WireIconClass parse_icon_classifier_response(const nlohmann::json& response);

}  // namespace ctxpolicy
