#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxpolicy {

/// Integer pixel rectangle, top-left origin.
struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    std::int64_t area() const { return std::int64_t(w) * h; }
    bool valid() const { return x >= 0 && y >= 0 && w > 0 && h > 0; }
    bool fits(int width, int height) const { return valid() && right() <= width && bottom() <= height; }

    friend bool operator==(const BBox&, const BBox&) = default;
    friend auto operator<=>(const BBox&, const BBox&) = default;
};

/// The twelve data types. Declaration order is the canonical order used for
/// tie-breaks and reports; the first six are basic PII.
enum class DataType : std::uint8_t {
    Name,
    Birthday,
    Address,
    Phone,
    Email,
    Profile,
    Contacts,
    Location,
    Photos,
    Voices,
    FinancialInfo,
    SocialMedia,
};

inline constexpr std::size_t kDataTypeCount = 12;

inline constexpr std::array<DataType, kDataTypeCount> kAllDataTypes = {
    DataType::Name,     DataType::Birthday, DataType::Address,       DataType::Phone,
    DataType::Email,    DataType::Profile,  DataType::Contacts,      DataType::Location,
    DataType::Photos,   DataType::Voices,   DataType::FinancialInfo, DataType::SocialMedia,
};

std::string_view to_string(DataType t);

/// Strict parse: exact spelling, no trimming.
std::optional<DataType> parse_data_type(std::string_view s);

inline std::size_t index_of(DataType t) { return static_cast<std::size_t>(t); }

inline bool is_basic_pii(DataType t) { return index_of(t) < 6; }

enum class ContextKind : std::uint8_t { Text, Icon };

std::string_view to_string(ContextKind k);
std::optional<ContextKind> parse_context_kind(std::string_view s);

struct Context {
    std::string screenshot_id;
    BBox bbox;
    ContextKind kind = ContextKind::Text;
    DataType data_type = DataType::Name;
    std::string evidence;
    double score = 1.0;

    friend bool operator==(const Context&, const Context&) = default;
};

struct EvalConfig {
    double iou_threshold = 0.5;
    double segment_threshold = 0.8;
    // A below-threshold non-fallback segment pair counts as both FP and FN.
    bool double_count_mismatch = true;

    void validate() const;
};

/// The verbatim message shown for data types with no matching policy text.
inline constexpr std::string_view kFallbackText =
    "No relative information is found in the privacy policy.";

/// Collects non-fatal warnings raised while processing.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
    bool empty() const { return warnings.empty(); }
};

}  // namespace ctxpolicy
