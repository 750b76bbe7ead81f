#include "ctxpolicy/types.hpp"

#include "ctxpolicy/error.hpp"

namespace ctxpolicy {

namespace {

constexpr std::array<std::string_view, kDataTypeCount> kDataTypeNames = {
    "Name",     "Birthday", "Address",       "Phone",
    "Email",    "Profile",  "Contacts",      "Location",
    "Photos",   "Voices",   "FinancialInfo", "SocialMedia",
};

}  // namespace

std::string_view to_string(DataType t) { return kDataTypeNames[index_of(t)]; }

std::optional<DataType> parse_data_type(std::string_view s) {
    for (std::size_t i = 0; i < kDataTypeNames.size(); ++i) {
        if (kDataTypeNames[i] == s) return kAllDataTypes[i];
    }
    return std::nullopt;
}

std::string_view to_string(ContextKind k) { return k == ContextKind::Text ? "Text" : "Icon"; }

std::optional<ContextKind> parse_context_kind(std::string_view s) {
    if (s == "Text") return ContextKind::Text;
    if (s == "Icon") return ContextKind::Icon;
    return std::nullopt;
}

void EvalConfig::validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw InputError("iou threshold must lie in (0,1], got " + std::to_string(iou_threshold));
    if (!(segment_threshold > 0.0 && segment_threshold <= 1.0))
        throw InputError("segment threshold must lie in (0,1], got " + std::to_string(segment_threshold));
}

}  // namespace ctxpolicy
