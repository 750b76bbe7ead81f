#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxpolicy/text.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

struct KeywordPhrase {
    std::string text;                 // lowercased as written, e.g. "e-mail address"
    std::vector<std::string> tokens;  // {"e", "mail", "address"}
};

/// Privacy keyword lists per data type.
class KeywordResource {
public:
    /// The built-in lists for textual GUI elements.
    static KeywordResource builtin();

    /// Reads `DataType<TAB>phrase` lines; `#` comments and blank lines are
    /// skipped. Types missing from the file keep no phrases, which fails
    /// validation.
    static KeywordResource load(const std::filesystem::path& path);

    void add(DataType type, std::string_view phrase);

    const std::vector<KeywordPhrase>& phrases(DataType type) const { return lists_[index_of(type)]; }

    /// Every list non-empty, every phrase non-empty after normalization.
    void validate() const;

private:
    std::array<std::vector<KeywordPhrase>, kDataTypeCount> lists_;
};

/// One token-boundary occurrence of a keyword phrase inside a text.
struct KeywordHit {
    DataType type = DataType::Name;
    std::size_t start = 0;  // byte offsets into the searched text
    std::size_t end = 0;
    std::size_t token_count = 0;
    std::string phrase;
};

/// All occurrences of `type`'s phrases in pre-tokenized text. Occurrences
/// nested inside a longer occurrence of the same type are dropped, so
/// "email address" yields one hit rather than two.
std::vector<KeywordHit> find_keyword_hits(const std::vector<text::Token>& tokens,
                                          const KeywordResource& keywords, DataType type);

/// Hits across all data types, in data-type order.
std::vector<KeywordHit> find_keyword_hits(std::string_view text, const KeywordResource& keywords);

struct TextClass {
    DataType type;
    std::string phrase;

    friend bool operator==(const TextClass&, const TextClass&) = default;
};

/// Keyword classification of a GUI text: longest matching phrase wins, ties
/// go to the earlier data type.
std::optional<TextClass> classify_text_keywords(std::string_view text, const KeywordResource& keywords);

}  // namespace ctxpolicy
