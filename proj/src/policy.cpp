#include "ctxpolicy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include "ctxpolicy/html.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

namespace {

constexpr std::array<std::string_view, 50> kStopwords = {
    "the", "a",    "an",   "and",   "or",    "of",    "to",   "in",   "on",    "for",
    "with", "by",  "from", "at",    "as",    "is",    "are",  "was",  "were",  "be",
    "been", "it",  "its",  "this",  "that",  "these", "those", "we",  "our",   "us",
    "you", "your", "they", "their", "them",  "he",    "she",  "his",  "her",   "not",
    "no",  "if",   "but",  "may",   "will",  "can",   "which", "who", "what",  "when",
};

constexpr std::array<std::string_view, 12> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "vs.", "mr.", "ms.", "dr.", "no.", "u.s.", "inc.", "ltd.", "co.",
};

// Chunk boundaries: articles, pronouns, prepositions, conjunctions,
// auxiliaries and modals, and the verbs policies use for data practices.
const std::unordered_set<std::string_view> kClosedClass = {
    // articles and determiners
    "a", "an", "the", "this", "that", "these", "those", "any", "all", "each", "every", "some", "such", "other",
    // pronouns
    "i", "me", "my", "mine", "we", "us", "our", "ours", "you", "your", "yours", "he", "him", "his", "she", "her",
    "hers", "it", "its", "they", "them", "their", "theirs", "who", "whom", "whose", "which", "what",
    // prepositions
    "of", "in", "on", "at", "by", "for", "with", "about", "to", "from", "into", "through", "during", "before",
    "after", "over", "under", "between", "via", "within", "without", "upon", "as", "across", "against",
    "including",
    // conjunctions
    "and", "or", "but", "nor", "if", "when", "while", "because", "so", "than", "whether", "unless", "also",
    // auxiliaries and modals
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "have", "has", "had", "can",
    "could", "may", "might", "must", "shall", "should", "will", "would", "not",
    // data-practice verbs
    "collect", "collects", "collected", "use", "uses", "used", "share", "shares", "shared", "store", "stores",
    "stored", "process", "processes", "processed", "provide", "provides", "provided",
    // clitic fragments left by the tokenizer ("device's", "don't")
    "s", "t",
};

bool is_ascii_alpha_token(std::string_view tok) {
    bool letter = false;
    for (char c : tok) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            letter = true;
        } else if (c != '-' && c != '\'') {
            return false;
        }
    }
    return letter;
}

std::string_view strip_edge_punct(std::string_view tok) {
    auto is_punct = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && !text::is_word_byte(u);
    };
    while (!tok.empty() && is_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && is_punct(tok.back())) tok.remove_suffix(1);
    return tok;
}

std::vector<std::string> block_tokens(std::string_view block) {
    std::vector<std::string> out;
    for (const auto& raw : text::split_ws(block)) {
        const auto t = strip_edge_punct(raw);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

bool contains_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + std::ptrdiff_t(i))) return true;
    }
    return false;
}

bool heading_matches_rules(const std::string& heading, const std::vector<HeadingRule>& rules) {
    const auto words = text::words(heading);
    bool relevant = false;
    for (const auto& r : rules) {
        if (!contains_phrase(words, text::words(r.phrase))) continue;
        if (!r.relevant) return false;
        relevant = true;
    }
    return relevant;
}

bool is_heading_tag(std::string_view tag) {
    return tag.size() == 2 && tag[0] == 'h' && tag[1] >= '1' && tag[1] <= '6';
}

bool is_block_tag(std::string_view tag) {
    static const std::unordered_set<std::string_view> kBlocks = {
        "p",      "li",     "div",   "ul",     "ol",   "h1",   "h2",   "h3",      "h4",
        "h5",     "h6",     "table", "section", "article", "header", "footer", "blockquote",
        "dl",     "form",   "main",  "aside",  "figure", "pre",  "tr",   "td",      "th",
    };
    return kBlocks.count(tag) != 0;
}

struct StructureEvent {
    bool heading = false;
    int level = 0;
    std::string text;
};

class StructureWalker {
public:
    explicit StructureWalker(const html::Document& doc) : doc_(doc) {}

    std::vector<StructureEvent> run() {
        walk(html::Document::kRoot);
        return std::move(events_);
    }

private:
    bool has_block_descendant(std::size_t i) const {
        for (auto c : doc_.node(i).children) {
            const auto& n = doc_.node(c);
            if (n.is_text()) continue;
            if (is_block_tag(n.tag) || has_block_descendant(c)) return true;
        }
        return false;
    }

    void walk(std::size_t i) {
        const auto& n = doc_.node(i);
        if (n.is_text()) return;
        if (is_heading_tag(n.tag)) {
            auto t = doc_.text_content(i);
            if (!t.empty()) events_.push_back({true, n.tag[1] - '0', std::move(t)});
            return;
        }
        if ((n.tag == "p" || n.tag == "li" || n.tag == "div") && !has_block_descendant(i)) {
            auto t = doc_.text_content(i);
            if (!t.empty()) events_.push_back({false, 0, std::move(t)});
            return;
        }
        for (auto c : n.children) walk(c);
    }

    const html::Document& doc_;
    std::vector<StructureEvent> events_;
};

}  // namespace

PolicyDocument parse_structure(std::string_view raw_html, std::string source) {
    const auto dom = html::Document::parse(raw_html);
    auto events = StructureWalker(dom).run();

    PolicyDocument doc;
    doc.source = std::move(source);
    doc.raw = std::string(raw_html);

    std::size_t headings = 0;
    std::size_t paragraphs = 0;
    std::size_t after_heading = 0;
    for (const auto& e : events) {
        if (e.heading) {
            ++headings;
        } else {
            ++paragraphs;
            if (headings > 0) ++after_heading;
        }
    }

    if (paragraphs == 0) {
        // Visible text outside any paragraph-like element still counts.
        const auto all = dom.text_content(html::Document::kRoot);
        if (all.empty()) throw EmptyDocumentError("policy has no visible text: " + doc.source);
        doc.sections.push_back({{}, {}, {all}});
        doc.structured = false;
        return doc;
    }

    doc.structured = headings >= 2 && after_heading * 5 >= paragraphs * 4;
    if (!doc.structured) {
        PolicySection only;
        for (auto& e : events) {
            if (!e.heading) only.paragraphs.push_back(std::move(e.text));
        }
        doc.sections.push_back(std::move(only));
        return doc;
    }

    struct OpenHeading {
        int level;
        std::string text;
    };
    std::vector<OpenHeading> open;
    PolicySection current;
    auto flush = [&] {
        if (!current.paragraphs.empty()) doc.sections.push_back(std::move(current));
        current = {};
    };
    for (auto& e : events) {
        if (!e.heading) {
            current.paragraphs.push_back(std::move(e.text));
            continue;
        }
        flush();
        while (!open.empty() && open.back().level >= e.level) open.pop_back();
        for (const auto& h : open) current.parent_headings.push_back(h.text);
        current.heading = e.text;
        open.push_back({e.level, std::move(e.text)});
    }
    flush();
    return doc;
}

PolicyDocument parse_plain_text(std::string_view raw, std::string source) {
    const std::string clean = html::sanitize_utf8(raw);
    PolicyDocument doc;
    doc.source = std::move(source);
    doc.raw = std::string(raw);
    PolicySection only;
    std::string block;
    std::size_t pos = 0;
    auto flush = [&] {
        auto p = text::collapse_whitespace(block);
        if (!p.empty()) only.paragraphs.push_back(std::move(p));
        block.clear();
    };
    while (pos <= clean.size()) {
        auto nl = clean.find('\n', pos);
        if (nl == std::string::npos) nl = clean.size();
        const auto line = std::string_view(clean).substr(pos, nl - pos);
        if (text::trim(line).empty()) {
            flush();
        } else {
            block.append(line);
            block.push_back(' ');
        }
        if (nl == clean.size()) break;
        pos = nl + 1;
    }
    flush();
    if (only.paragraphs.empty()) throw EmptyDocumentError("policy has no visible text: " + doc.source);
    doc.sections.push_back(std::move(only));
    return doc;
}

double english_score(std::string_view block) {
    const auto toks = block_tokens(block);
    if (toks.empty()) return 0.0;
    std::size_t ascii = 0;
    std::size_t stop = 0;
    for (const auto& t : toks) {
        if (is_ascii_alpha_token(t)) ++ascii;
        const auto lower = text::to_lower(t);
        if (std::find(kStopwords.begin(), kStopwords.end(), lower) != kStopwords.end()) ++stop;
    }
    const double n = double(toks.size());
    return 0.5 * double(ascii) / n + 0.5 * double(stop) / n;
}

std::vector<std::string> filter_language(const std::vector<std::string>& blocks) {
    std::vector<std::string> out;
    for (const auto& b : blocks) {
        if (block_tokens(b).size() < 3 || english_score(b) > 0.5) out.push_back(b);
    }
    return out;
}

PolicyDocument filter_document_language(PolicyDocument doc) {
    std::vector<PolicySection> kept;
    for (auto& s : doc.sections) {
        s.paragraphs = filter_language(s.paragraphs);
        if (!s.paragraphs.empty()) kept.push_back(std::move(s));
    }
    doc.sections = std::move(kept);
    return doc;
}

std::vector<HeadingRule> default_heading_rules() {
    return {
        {"information we collect", true}, {"data we collect", true},  {"personal information", true},
        {"personal data", true},          {"information you provide", true}, {"types of data", true},
        {"what we collect", true},
    };
}

std::vector<HeadingRule> load_heading_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open heading rule file " + path.string());
    std::vector<HeadingRule> rules;
    std::string line;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        bool relevant = true;
        if (t.front() == '!') {
            relevant = false;
            t.remove_prefix(1);
        }
        auto phrase = text::to_lower(text::collapse_whitespace(t));
        if (!phrase.empty()) rules.push_back({std::move(phrase), relevant});
    }
    return rules;
}

void MatchConfig::validate() const {
    if (!(phrase_sim_threshold > 0.0 && phrase_sim_threshold <= 1.0))
        throw InputError("phrase similarity threshold must lie in (0,1]");
}

std::vector<std::size_t> classify_headings(const PolicyDocument& doc, const MatchConfig& cfg,
                                           const ExtractHooks& hooks) {
    std::vector<std::size_t> out;
    if (!doc.structured) return out;
    for (std::size_t i = 0; i < doc.sections.size(); ++i) {
        const auto& s = doc.sections[i];
        std::optional<bool> verdict;
        if (hooks.heading_classifier) verdict = hooks.heading_classifier(s.heading);
        if (!verdict) {
            bool rel = heading_matches_rules(s.heading, cfg.heading_rules);
            for (const auto& parent : s.parent_headings) rel = rel || heading_matches_rules(parent, cfg.heading_rules);
            verdict = rel;
        }
        if (*verdict) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> classify_paragraphs(const std::vector<std::string>& paragraphs,
                                             const KeywordResource& keywords, const ExtractHooks& hooks) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        std::optional<bool> verdict;
        if (hooks.paragraph_classifier) verdict = hooks.paragraph_classifier(paragraphs[i]);
        if (!verdict) verdict = !find_keyword_hits(paragraphs[i], keywords).empty();
        if (*verdict) out.push_back(i);
    }
    return out;
}

std::vector<SentenceSpan> split_sentences(std::string_view p, std::size_t section_idx, std::size_t paragraph_idx) {
    std::vector<SentenceSpan> out;
    auto emit = [&](std::size_t b, std::size_t e) {
        while (b < e && text::is_space(static_cast<unsigned char>(p[b]))) ++b;
        while (e > b && text::is_space(static_cast<unsigned char>(p[e - 1]))) --e;
        if (e > b) out.push_back({section_idx, paragraph_idx, b, e, std::string(p.substr(b, e - b))});
    };
    auto is_terminator = [](char c) { return c == '.' || c == '!' || c == '?'; };
    auto is_closer = [](char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; };

    auto protected_abbrev = [&](std::size_t dot) {
        std::size_t b = dot;
        while (b > 0 && !text::is_space(static_cast<unsigned char>(p[b - 1]))) --b;
        auto word = p.substr(b, dot + 1 - b);
        while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\''))
            word.remove_prefix(1);
        const auto lower = text::to_lower(word);
        return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
    };

    std::size_t begin = 0;
    std::size_t i = 0;
    while (i < p.size()) {
        if (!is_terminator(p[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < p.size() && (is_terminator(p[j + 1]) || is_closer(p[j + 1]))) ++j;
        const std::size_t end = j + 1;
        if (p[i] == '.' && protected_abbrev(i)) {
            i = end;
            continue;
        }
        std::size_t k = end;
        while (k < p.size() && text::is_space(static_cast<unsigned char>(p[k]))) ++k;
        const bool at_end = k == p.size();
        const bool spaced = k > end;
        const bool boundary =
            at_end || (spaced && ((p[k] >= 'A' && p[k] <= 'Z') || (p[k] >= '0' && p[k] <= '9')));
        if (boundary) {
            emit(begin, end);
            begin = end;
        }
        i = end;
    }
    emit(begin, p.size());
    return out;
}

std::string_view to_string(HighlightKind k) { return k == HighlightKind::Keyword ? "Keyword" : "NounChunk"; }

std::string SegmentGroup::text() const {
    if (fallback) return std::string(kFallbackText);
    std::vector<std::string> parts;
    for (const auto& s : sentences) parts.push_back(s.text);
    return text::join(parts, " ");
}

SegmentGroups empty_groups() {
    SegmentGroups groups;
    for (auto t : kAllDataTypes) {
        groups[index_of(t)].data_type = t;
        groups[index_of(t)].fallback = true;
    }
    return groups;
}

std::array<std::vector<KeywordMatch>, kDataTypeCount> keyword_stage(std::string_view sentence,
                                                                    const KeywordResource& keywords) {
    std::array<std::vector<KeywordMatch>, kDataTypeCount> out;
    const auto tokens = text::tokenize(sentence);
    for (auto t : kAllDataTypes) {
        for (auto& h : find_keyword_hits(tokens, keywords, t)) {
            out[index_of(t)].push_back({h.start, h.end, std::move(h.phrase)});
        }
    }
    return out;
}

NbModel NbModel::train(const std::vector<Example>& examples, double alpha) {
    if (!(alpha > 0.0)) throw InputError("naive Bayes smoothing must be positive");
    NbModel m;
    m.alpha_ = alpha;
    for (const auto& ex : examples) {
        const std::size_t c = ex.relevant ? 1 : 0;
        ++m.doc_counts_[c];
        for (auto& w : text::words(ex.sentence)) {
            ++m.vocab_[w][c];
            ++m.token_totals_[c];
        }
    }
    if (m.doc_counts_[0] == 0 || m.doc_counts_[1] == 0)
        throw InputError("naive Bayes training data must contain both relevant and irrelevant examples");
    return m;
}

NbModel NbModel::load(const std::filesystem::path& path, double alpha) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open relevance training file " + path.string());
    std::vector<Example> examples;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tab = line.find('\t');
        const auto label = tab == std::string::npos ? std::string() : line.substr(0, tab);
        if (label != "relevant" && label != "irrelevant")
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": expected relevant<TAB>sentence or irrelevant<TAB>sentence");
        examples.push_back({label == "relevant", line.substr(tab + 1)});
    }
    return train(examples, alpha);
}

double NbModel::log_posterior(std::string_view sentence, bool relevant) const {
    const std::size_t c = relevant ? 1 : 0;
    const double docs = double(doc_counts_[0] + doc_counts_[1]);
    double lp = std::log(double(doc_counts_[c]) / docs);
    const double denom = double(token_totals_[c]) + alpha_ * double(vocab_.size());
    for (const auto& w : text::words(sentence)) {
        auto it = vocab_.find(w);
        if (it == vocab_.end()) continue;
        lp += std::log((double(it->second[c]) + alpha_) / denom);
    }
    return lp;
}

bool NbModel::predict(std::string_view sentence) const {
    return log_posterior(sentence, true) > log_posterior(sentence, false);
}

bool relevance_stage(std::string_view sentence, const NbModel* model) {
    if (text::words(sentence).empty()) return false;
    if (!model) return true;
    return model->predict(sentence);
}

std::vector<NounChunk> chunk_noun_spans(std::string_view sentence) {
    const auto tokens = text::tokenize(sentence);
    std::vector<NounChunk> out;
    std::vector<const text::Token*> run;
    auto flush = [&] {
        if (run.empty()) return;
        const std::size_t first = run.size() > 4 ? run.size() - 4 : 0;
        NounChunk c;
        c.char_start = run[first]->start;
        c.char_end = run.back()->end;
        for (std::size_t k = first; k < run.size(); ++k) {
            if (!c.text.empty()) c.text.push_back(' ');
            c.text += run[k]->norm;
        }
        out.push_back(std::move(c));
        run.clear();
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!run.empty()) {
            // Punctuation other than intra-word hyphens and apostrophes ends a chunk.
            const auto gap = sentence.substr(run.back()->end, tokens[i].start - run.back()->end);
            const bool punct = std::any_of(gap.begin(), gap.end(), [](char c) {
                return !text::is_space(static_cast<unsigned char>(c)) && c != '-' && c != '\'';
            });
            if (punct) flush();
        }
        if (kClosedClass.count(tokens[i].norm)) {
            flush();
            continue;
        }
        run.push_back(&tokens[i]);
    }
    flush();
    return out;
}

std::vector<std::string> chunk_nouns(std::string_view sentence, const ExtractHooks& hooks) {
    if (hooks.noun_chunker) {
        if (auto r = hooks.noun_chunker(std::string(sentence))) return *r;
    }
    std::vector<std::string> out;
    for (auto& c : chunk_noun_spans(sentence)) out.push_back(std::move(c.text));
    return out;
}

double phrase_sim(std::string_view p1, std::string_view p2, const Taxonomy& tax) {
    const auto w1 = text::words(p1);
    const auto w2 = text::words(p2);
    if (w1.empty() || w2.empty()) return 0.0;
    const double ps = path_similarity(w1.back(), w2.back(), tax);
    return 2.0 * ps / double(w1.size() + w2.size());
}

SegmentGroups extract_segments(const PolicyDocument& doc, const KeywordResource& keywords, const Taxonomy& tax,
                               const NbModel* nb, const MatchConfig& cfg, const ExtractHooks& hooks) {
    cfg.validate();
    auto groups = empty_groups();

    std::vector<std::pair<std::size_t, std::size_t>> relevant;
    if (doc.structured) {
        for (auto s : classify_headings(doc, cfg, hooks)) {
            for (std::size_t p = 0; p < doc.sections[s].paragraphs.size(); ++p) relevant.emplace_back(s, p);
        }
    } else {
        for (std::size_t s = 0; s < doc.sections.size(); ++s) {
            for (auto p : classify_paragraphs(doc.sections[s].paragraphs, keywords, hooks)) relevant.emplace_back(s, p);
        }
    }

    // A sentence repeated anywhere in the document is kept once per group.
    std::array<std::map<std::string, std::size_t>, kDataTypeCount> seen;
    auto attach = [&](DataType t, const SentenceSpan& span) -> std::size_t {
        auto& g = groups[index_of(t)];
        auto [it, inserted] = seen[index_of(t)].emplace(span.text, g.sentences.size());
        if (inserted) g.sentences.push_back(span);
        return it->second;
    };
    auto highlight = [&](DataType t, HighlightSpan h) {
        auto& hs = groups[index_of(t)].highlights;
        if (std::find(hs.begin(), hs.end(), h) == hs.end()) hs.push_back(h);
    };

    for (auto [s, p] : relevant) {
        for (const auto& span : split_sentences(doc.sections[s].paragraphs[p], s, p)) {
            const auto hits = keyword_stage(span.text, keywords);
            const bool any = std::any_of(hits.begin(), hits.end(), [](const auto& v) { return !v.empty(); });
            if (any) {
                for (auto t : kAllDataTypes) {
                    const auto& th = hits[index_of(t)];
                    if (th.empty()) continue;
                    const auto idx = attach(t, span);
                    for (const auto& h : th) highlight(t, {idx, h.char_start, h.char_end, HighlightKind::Keyword});
                }
                continue;
            }
            if (!cfg.use_relevance_stage || !relevance_stage(span.text, nb)) continue;

            std::vector<NounChunk> chunks;
            if (hooks.noun_chunker) {
                if (auto custom = hooks.noun_chunker(span.text)) {
                    const auto lower = text::to_lower(span.text);
                    for (auto& c : *custom) {
                        const auto norm = text::to_lower(text::trim(c));
                        if (norm.empty()) continue;
                        const auto at = lower.find(norm);
                        NounChunk nc;
                        nc.text = norm;
                        if (at != std::string::npos) {
                            nc.char_start = at;
                            nc.char_end = at + norm.size();
                        }
                        chunks.push_back(std::move(nc));
                    }
                } else {
                    chunks = chunk_noun_spans(span.text);
                }
            } else {
                chunks = chunk_noun_spans(span.text);
            }

            for (auto t : kAllDataTypes) {
                double best = -1.0;
                const NounChunk* winner = nullptr;
                for (const auto& c : chunks) {
                    for (const auto& kw : keywords.phrases(t)) {
                        const double sim = phrase_sim(c.text, kw.text, tax);
                        if (sim > best) {
                            best = sim;
                            winner = &c;
                        }
                    }
                }
                if (!winner || best < cfg.phrase_sim_threshold) continue;
                const auto idx = attach(t, span);
                if (winner->char_end > winner->char_start)
                    highlight(t, {idx, winner->char_start, winner->char_end, HighlightKind::NounChunk});
            }
        }
    }

    for (auto& g : groups) g.fallback = g.sentences.empty();
    return groups;
}

}  // namespace ctxpolicy
