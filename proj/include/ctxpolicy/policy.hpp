#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/keywords.hpp"
#include "ctxpolicy/taxonomy.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

class EmptyDocumentError : public InputError {
public:
    using InputError::InputError;
};

struct PolicySection {
    std::string heading;                       // empty for the synthetic section
    std::vector<std::string> parent_headings;  // enclosing higher-level headings, outermost first
    std::vector<std::string> paragraphs;       // whitespace-normalized visible text
};

struct PolicyDocument {
    std::string source;
    std::string raw;
    std::vector<PolicySection> sections;
    bool structured = false;
};

/// Heading/paragraph structure of an HTML policy. A document is structured
/// when it has at least two headings and at least 80% of paragraph
/// candidates (p, li, leaf div) follow some heading. Unstructured documents
/// get a single section with an empty heading. Throws EmptyDocumentError
/// when there is no visible text.
PolicyDocument parse_structure(std::string_view raw_html, std::string source = {});

/// Plain-text policy: blank-line separated blocks, never structured.
PolicyDocument parse_plain_text(std::string_view raw, std::string source = {});

/// English score: 0.5 * (ASCII-alphabetic token fraction) + 0.5 * (stopword
/// fraction).
double english_score(std::string_view block);

/// Keeps blocks scoring strictly above 0.5 and blocks under three tokens.
std::vector<std::string> filter_language(const std::vector<std::string>& blocks);

/// filter_language applied to every section; sections left without
/// paragraphs are removed.
PolicyDocument filter_document_language(PolicyDocument doc);

struct HeadingRule {
    std::string phrase;  // lowercase
    bool relevant = true;
};

std::vector<HeadingRule> default_heading_rules();

/// One lowercase phrase per line marks relevance; a leading '!' marks the
/// phrase as a veto. Blank lines and `#` comments are skipped.
std::vector<HeadingRule> load_heading_rules(const std::filesystem::path& path);

struct MatchConfig {
    double phrase_sim_threshold = 0.8;
    std::vector<HeadingRule> heading_rules = default_heading_rules();
    // When false only the keyword stage runs.
    bool use_relevance_stage = true;

    void validate() const;
};

/// Optional substitutes for the built-in classifiers. A hook returning
/// nullopt defers to the built-in rule for that item.
struct ExtractHooks {
    std::function<std::optional<bool>(const std::string& heading)> heading_classifier;
    std::function<std::optional<bool>(const std::string& paragraph)> paragraph_classifier;
    std::function<std::optional<std::vector<std::string>>(const std::string& sentence)> noun_chunker;
};

/// Section indices whose heading, or any enclosing heading, contains a
/// relevant identifier phrase and no veto phrase. Requires doc.structured.
std::vector<std::size_t> classify_headings(const PolicyDocument& doc, const MatchConfig& cfg,
                                           const ExtractHooks& hooks = {});

/// Indices of paragraphs containing at least one keyword of any data type.
std::vector<std::size_t> classify_paragraphs(const std::vector<std::string>& paragraphs,
                                             const KeywordResource& keywords, const ExtractHooks& hooks = {});

struct SentenceSpan {
    std::size_t section_idx = 0;
    std::size_t paragraph_idx = 0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string text;

    friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

/// Splits at '.', '!' or '?' (plus trailing closing quotes or brackets) when
/// followed by whitespace and then an uppercase letter, a digit, or the end
/// of text. Common abbreviations (e.g., i.e., etc., U.S., Inc., ...) never
/// end a sentence. Spans exclude surrounding whitespace.
std::vector<SentenceSpan> split_sentences(std::string_view paragraph, std::size_t section_idx = 0,
                                          std::size_t paragraph_idx = 0);

enum class HighlightKind { Keyword, NounChunk };

std::string_view to_string(HighlightKind k);

struct HighlightSpan {
    std::size_t sentence = 0;  // index into the owning group's sentences
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    HighlightKind kind = HighlightKind::Keyword;

    friend bool operator==(const HighlightSpan&, const HighlightSpan&) = default;
};

struct SegmentGroup {
    DataType data_type = DataType::Name;
    std::vector<SentenceSpan> sentences;
    std::vector<HighlightSpan> highlights;
    bool fallback = true;

    /// Sentences joined by a space, or the fallback message.
    std::string text() const;

    friend bool operator==(const SegmentGroup&, const SegmentGroup&) = default;
};

using SegmentGroups = std::array<SegmentGroup, kDataTypeCount>;

/// Twelve fallback groups in canonical order.
SegmentGroups empty_groups();

/// Sentence-local keyword hit.
struct KeywordMatch {
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string phrase;
};

/// Every token-boundary keyword occurrence per data type. Occurrences nested
/// in a longer occurrence of the same type are folded into it.
std::array<std::vector<KeywordMatch>, kDataTypeCount> keyword_stage(std::string_view sentence,
                                                                    const KeywordResource& keywords);

/// Multinomial naive Bayes over lowercase word tokens, relevant vs
/// irrelevant, Laplace smoothed, evaluated in log space.
class NbModel {
public:
    struct Example {
        bool relevant = false;
        std::string sentence;
    };

    static NbModel train(const std::vector<Example>& examples, double alpha = 1.0);

    /// `relevant<TAB>sentence` / `irrelevant<TAB>sentence` lines, UTF-8.
    /// Blank lines and `#` comments are skipped.
    static NbModel load(const std::filesystem::path& path, double alpha = 1.0);

    /// log P(class) + sum log P(token | class), skipping out-of-vocabulary
    /// tokens.
    double log_posterior(std::string_view sentence, bool relevant) const;

    bool predict(std::string_view sentence) const;

    std::size_t vocabulary_size() const { return vocab_.size(); }

private:
    double alpha_ = 1.0;
    std::unordered_map<std::string, std::array<std::size_t, 2>> vocab_;
    std::array<std::size_t, 2> token_totals_{};
    std::array<std::size_t, 2> doc_counts_{};
};

/// Without a model every non-empty sentence passes. Empty sentences never do.
bool relevance_stage(std::string_view sentence, const NbModel* model);

struct NounChunk {
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string text;  // lowercase, single-spaced
};

/// Heuristic chunker: the token stream is cut at closed-class words and at
/// punctuation; each remaining run is a chunk. Runs longer than four tokens
/// keep their last four, where the head noun sits.
std::vector<NounChunk> chunk_noun_spans(std::string_view sentence);

std::vector<std::string> chunk_nouns(std::string_view sentence, const ExtractHooks& hooks = {});

/// 2 * path_similarity(head(p1), head(p2)) / (words(p1) + words(p2)), where
/// head is the last word.
double phrase_sim(std::string_view p1, std::string_view p2, const Taxonomy& tax);

/// Full sentence-level segment extraction. Always returns twelve groups.
SegmentGroups extract_segments(const PolicyDocument& doc, const KeywordResource& keywords, const Taxonomy& tax,
                               const NbModel* nb, const MatchConfig& cfg, const ExtractHooks& hooks = {});

}  // namespace ctxpolicy
