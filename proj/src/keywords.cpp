#include "ctxpolicy/keywords.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "ctxpolicy/error.hpp"

namespace ctxpolicy {

namespace {

struct BuiltinRow {
    DataType type;
    std::initializer_list<std::string_view> phrases;
};

// "address" alone is deliberately absent: it is ambiguous between postal and
// email addresses.
const BuiltinRow kBuiltinRows[] = {
    {DataType::Name,
     {"name", "first name", "last name", "full name", "real name", "surname", "family name", "given name"}},
    {DataType::Birthday, {"birthday", "date of birth", "birth date", "DOB", "birth year"}},
    {DataType::Address,
     {"mailing address", "physical address", "postal address", "billing address", "shipping address",
      "residential address", "residence", "personal address"}},
    {DataType::Phone,
     {"phone", "phone number", "mobile phone", "mobile number", "telephone", "call", "telephone number"}},
    {DataType::Email, {"email", "e-mail", "email address", "e-mail address"}},
    {DataType::Profile, {"profile", "account"}},
    {DataType::Contacts, {"contacts", "phone-book", "phone book", "device's address book"}},
    {DataType::Location, {"location", "locate", "geography", "geo", "geo-location", "precision location"}},
    {DataType::Photos,
     {"camera", "photo", "scan", "album", "picture", "gallery", "photo library", "storage", "image", "video",
      "scanner", "photograph", "wallpaper"}},
    {DataType::Voices, {"microphone", "voice", "mic", "speech", "talk", "audio"}},
    {DataType::FinancialInfo,
     {"credit card", "company", "companies", "organization", "commercial", "organizations", "pay", "payment",
      "financial", "bill", "wallet", "purchase"}},
    {DataType::SocialMedia, {"social media", "Facebook", "Twitter", "socialmedia", "share"}},
};

bool tokens_equal_at(const std::vector<text::Token>& tokens, std::size_t at,
                     const std::vector<std::string>& phrase) {
    if (at + phrase.size() > tokens.size()) return false;
    for (std::size_t k = 0; k < phrase.size(); ++k) {
        if (tokens[at + k].norm != phrase[k]) return false;
    }
    return true;
}

}  // namespace

KeywordResource KeywordResource::builtin() {
    KeywordResource r;
    for (const auto& row : kBuiltinRows) {
        for (auto p : row.phrases) r.add(row.type, p);
    }
    return r;
}

KeywordResource KeywordResource::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open keyword file " + path.string());
    KeywordResource r;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected DataType<TAB>phrase");
        const auto type = parse_data_type(line.substr(0, tab));
        if (!type)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": unknown data type '" +
                             line.substr(0, tab) + "'");
        if (text::words(line.substr(tab + 1)).empty())
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": empty phrase");
        r.add(*type, line.substr(tab + 1));
    }
    r.validate();
    return r;
}

void KeywordResource::add(DataType type, std::string_view phrase) {
    KeywordPhrase kp{text::to_lower(text::collapse_whitespace(phrase)), text::words(phrase)};
    auto& list = lists_[index_of(type)];
    const bool dup = std::any_of(list.begin(), list.end(),
                                 [&](const KeywordPhrase& p) { return p.text == kp.text; });
    if (!dup) list.push_back(std::move(kp));
}

void KeywordResource::validate() const {
    for (auto t : kAllDataTypes) {
        const auto& list = phrases(t);
        if (list.empty()) throw InputError("keyword list for " + std::string(to_string(t)) + " is empty");
        for (const auto& p : list) {
            if (p.tokens.empty())
                throw InputError("empty keyword phrase for " + std::string(to_string(t)));
        }
    }
}

std::vector<KeywordHit> find_keyword_hits(const std::vector<text::Token>& tokens,
                                          const KeywordResource& keywords, DataType type) {
    std::vector<KeywordHit> hits;
    for (const auto& phrase : keywords.phrases(type)) {
        if (phrase.tokens.empty()) continue;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (!tokens_equal_at(tokens, i, phrase.tokens)) continue;
            const auto& last = tokens[i + phrase.tokens.size() - 1];
            hits.push_back({type, tokens[i].start, last.end, phrase.tokens.size(), phrase.text});
        }
    }

    // Two phrases that normalize identically ("phone-book", "phone book")
    // produce the same span; keep the first.
    std::stable_sort(hits.begin(), hits.end(), [](const KeywordHit& a, const KeywordHit& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.end > b.end;
    });
    std::vector<KeywordHit> out;
    for (auto& h : hits) {
        const bool nested = std::any_of(out.begin(), out.end(), [&](const KeywordHit& o) {
            return o.start <= h.start && h.end <= o.end;
        });
        if (!nested) out.push_back(std::move(h));
    }
    return out;
}

std::vector<KeywordHit> find_keyword_hits(std::string_view s, const KeywordResource& keywords) {
    const auto tokens = text::tokenize(s);
    std::vector<KeywordHit> out;
    for (auto t : kAllDataTypes) {
        auto hits = find_keyword_hits(tokens, keywords, t);
        out.insert(out.end(), std::make_move_iterator(hits.begin()), std::make_move_iterator(hits.end()));
    }
    return out;
}

std::optional<TextClass> classify_text_keywords(std::string_view s, const KeywordResource& keywords) {
    const auto hits = find_keyword_hits(s, keywords);
    const KeywordHit* best = nullptr;
    for (const auto& h : hits) {
        // Strictly longer only; hits arrive in data-type order.
        if (!best || h.token_count > best->token_count) best = &h;
    }
    if (!best) return std::nullopt;
    return TextClass{best->type, best->phrase};
}

}  // namespace ctxpolicy
