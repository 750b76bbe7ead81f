#include <gtest/gtest.h>

#include <cmath>

#include "ctxpolicy/html.hpp"
#include "ctxpolicy/policy.hpp"
#include "test_env.hpp"

using namespace ctxpolicy;

namespace {

PolicyDocument structured_doc(std::vector<std::pair<std::string, std::vector<std::string>>> sections) {
    PolicyDocument d;
    d.structured = true;
    for (auto& [h, ps] : sections) d.sections.push_back({h, {}, ps});
    return d;
}

std::vector<std::string> texts(const std::vector<SentenceSpan>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.text);
    return out;
}

}  // namespace

TEST(Html, EntitiesAndEscaping) {
    EXPECT_EQ(html::decode_entities("a &amp; b &#39;c&#x2019; &bogus;"), "a & b 'c\xe2\x80\x99 &bogus;");
    EXPECT_EQ(html::escape("<a href=\"x\">&</a>"), "&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
    EXPECT_EQ(html::sanitize_utf8("ok\xff"), "ok\xef\xbf\xbd");
}

TEST(Html, DroppedElementsAndTextContent) {
    const auto doc = html::Document::parse("<div>Hello <b>big</b> world<script>var x = 1;</script><style>p{}</style>");
    EXPECT_EQ(doc.text_content(html::Document::kRoot), "Hello big world");
}

TEST(Structure, HeadingsMakeSections) {
    const auto doc = parse_structure("<h2>Data We Collect</h2><p>A.</p><p>B.</p><h2>Sharing</h2><p>C.</p>");
    EXPECT_TRUE(doc.structured);
    ASSERT_EQ(doc.sections.size(), 2u);
    EXPECT_EQ(doc.sections[0].heading, "Data We Collect");
    EXPECT_EQ(doc.sections[0].paragraphs, (std::vector<std::string>{"A.", "B."}));
    EXPECT_EQ(doc.sections[1].paragraphs, (std::vector<std::string>{"C."}));
}

TEST(Structure, NoHeadingsGivesOneSyntheticSection) {
    const auto doc = parse_structure("<p>only text</p>");
    EXPECT_FALSE(doc.structured);
    ASSERT_EQ(doc.sections.size(), 1u);
    EXPECT_EQ(doc.sections[0].heading, "");
    EXPECT_EQ(doc.sections[0].paragraphs, (std::vector<std::string>{"only text"}));
}

TEST(Structure, ScriptTextNeverReachesParagraphs) {
    const auto doc = parse_structure(
        "<h2>Data We Collect</h2><p>We collect email.</p><script>trackEverything()</script>"
        "<h2>Other</h2><p>Text.<script>alert(1)</script></p>");
    for (const auto& s : doc.sections)
        for (const auto& p : s.paragraphs) {
            EXPECT_EQ(p.find("track"), std::string::npos);
            EXPECT_EQ(p.find("alert"), std::string::npos);
        }
}

TEST(Structure, EmptyDocumentThrows) {
    EXPECT_THROW(parse_structure(""), EmptyDocumentError);
    EXPECT_THROW(parse_structure("<html><script>x()</script></html>"), EmptyDocumentError);
}

TEST(Structure, NestedHeadingsRecordParents) {
    const auto doc =
        parse_structure("<h1>Policy</h1><h2>Information We Collect</h2><h3>Device</h3><p>We collect data.</p>"
                        "<h2>Other</h2><p>More.</p>");
    const auto it = std::find_if(doc.sections.begin(), doc.sections.end(),
                                 [](const PolicySection& s) { return s.heading == "Device"; });
    ASSERT_NE(it, doc.sections.end());
    EXPECT_EQ(it->parent_headings, (std::vector<std::string>{"Policy", "Information We Collect"}));
}

TEST(PlainText, BlankLineBlocks) {
    const auto doc = parse_plain_text("First block\nstill first.\n\n\nSecond block.\n");
    EXPECT_FALSE(doc.structured);
    ASSERT_EQ(doc.sections.size(), 1u);
    EXPECT_EQ(doc.sections[0].paragraphs, (std::vector<std::string>{"First block still first.", "Second block."}));
}

TEST(Language, Filter) {
    EXPECT_EQ(filter_language({"We collect your email address"}).size(), 1u);
    EXPECT_TRUE(filter_language({"Nous recueillons votre adresse e-mail"}).empty());
    EXPECT_EQ(filter_language({"OK"}).size(), 1u);
    EXPECT_LT(english_score("Nous recueillons votre adresse e-mail"), english_score("We collect your email address"));
}

TEST(Headings, DefaultRules) {
    const auto doc = structured_doc({{"Information We Collect", {"x"}}, {"Contact Us", {"x"}},
                                     {"WHAT WE COLLECT", {"x"}}, {"Cookies", {"x"}}});
    EXPECT_EQ(classify_headings(doc, MatchConfig{}), (std::vector<std::size_t>{0, 2}));
}

TEST(Headings, ParentHeadingAndVeto) {
    auto doc = structured_doc({{"Device data", {"x"}}, {"Personal information of children", {"x"}}});
    doc.sections[0].parent_headings = {"Personal Information"};
    MatchConfig cfg;
    cfg.heading_rules = load_heading_rules(testenv::resources_dir() / "heading_rules.txt");
    EXPECT_EQ(classify_headings(doc, cfg), (std::vector<std::size_t>{0}));
}

TEST(Headings, HookOverrides) {
    const auto doc = structured_doc({{"Information We Collect", {"x"}}, {"Misc", {"x"}}});
    ExtractHooks hooks;
    hooks.heading_classifier = [](const std::string& h) -> std::optional<bool> {
        if (h == "Misc") return true;
        return std::nullopt;
    };
    EXPECT_EQ(classify_headings(doc, MatchConfig{}, hooks), (std::vector<std::size_t>{0, 1}));
}

TEST(Paragraphs, KeywordRelevance) {
    const auto kw = KeywordResource::builtin();
    EXPECT_EQ(classify_paragraphs({"We may access your contacts.", "This policy was updated in May."}, kw),
              (std::vector<std::size_t>{0}));
    EXPECT_TRUE(classify_paragraphs({}, kw).empty());
}

TEST(Sentences, Splitting) {
    const auto two = split_sentences("We collect data. We share it.");
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].text, "We collect data.");
    EXPECT_EQ(two[0].char_start, 0u);
    EXPECT_EQ(two[0].char_end, 16u);
    EXPECT_EQ(two[1].char_start, 17u);
    EXPECT_EQ(split_sentences("We use cookies, e.g. session cookies, for login.").size(), 1u);
    EXPECT_TRUE(split_sentences("").empty());
    EXPECT_EQ(texts(split_sentences("Based in the U.S. Our office is small. Is it? Yes!")),
              (std::vector<std::string>{"Based in the U.S. Our office is small.", "Is it?", "Yes!"}));
    EXPECT_EQ(texts(split_sentences("Version 2.0 is here. 3 items follow.")),
              (std::vector<std::string>{"Version 2.0 is here.", "3 items follow."}));
}

TEST(Sentences, SpansTileTheParagraph) {
    const std::string p = "  One sentence here.   Two: \"quoted.\" Three (bracketed.)  ";
    const auto spans = split_sentences(p, 3, 4);
    std::size_t prev = 0;
    for (const auto& s : spans) {
        EXPECT_EQ(s.section_idx, 3u);
        EXPECT_EQ(s.paragraph_idx, 4u);
        EXPECT_GE(s.char_start, prev);
        EXPECT_EQ(p.substr(s.char_start, s.char_end - s.char_start), s.text);
        EXPECT_FALSE(text::is_space(s.text.front()));
        EXPECT_FALSE(text::is_space(s.text.back()));
        for (std::size_t i = prev; i < s.char_start; ++i) EXPECT_TRUE(text::is_space(p[i]));
        prev = s.char_end;
    }
    for (std::size_t i = prev; i < p.size(); ++i) EXPECT_TRUE(text::is_space(p[i]));
}

TEST(KeywordStage, LongestPhraseHighlight) {
    const auto kw = KeywordResource::builtin();
    const auto hits = keyword_stage("We collect your email address.", kw);
    const auto& email = hits[index_of(DataType::Email)];
    ASSERT_EQ(email.size(), 1u);
    EXPECT_EQ(email[0].char_start, 16u);
    EXPECT_EQ(email[0].char_end, 29u);
    EXPECT_TRUE(keyword_stage("Our address is 1 Main St.", kw)[index_of(DataType::Address)].empty());
    for (const auto& v : keyword_stage("The weather is nice.", kw)) EXPECT_TRUE(v.empty());
}

TEST(NaiveBayes, HandComputedPosteriors) {
    const auto nb = NbModel::train({{true, "we collect your data"}, {false, "contact our office"}});
    EXPECT_EQ(nb.vocabulary_size(), 7u);
    // "information" is out of vocabulary and contributes nothing.
    const double rel = std::log(0.5) + 2 * std::log(2.0 / 11.0);
    const double irr = std::log(0.5) + 2 * std::log(1.0 / 10.0);
    EXPECT_NEAR(nb.log_posterior("we collect information", true), rel, 1e-12);
    EXPECT_NEAR(nb.log_posterior("we collect information", false), irr, 1e-12);
    EXPECT_TRUE(nb.predict("we collect information"));
    EXPECT_TRUE(relevance_stage("we collect information", &nb));
}

TEST(NaiveBayes, NoModelAndEmptySentence) {
    EXPECT_TRUE(relevance_stage("anything at all", nullptr));
    EXPECT_FALSE(relevance_stage("", nullptr));
    EXPECT_FALSE(relevance_stage(" ... ", nullptr));
}

TEST(NaiveBayes, ShippedTrainingFile) {
    const auto nb = NbModel::load(testenv::resources_dir() / "relevance.tsv");
    EXPECT_GT(nb.vocabulary_size(), 20u);
}

TEST(Chunker, Examples) {
    EXPECT_EQ(chunk_nouns("We may collect your precise location"), (std::vector<std::string>{"precise location"}));
    EXPECT_TRUE(chunk_nouns("and the of").empty());
    EXPECT_EQ(chunk_nouns("payment information and billing history"),
              (std::vector<std::string>{"payment information", "billing history"}));
}

TEST(Chunker, OffsetsPointAtTheChunk) {
    const std::string s = "We store Your Device Identifiers, sometimes.";
    for (const auto& c : chunk_noun_spans(s))
        EXPECT_EQ(text::to_lower(s.substr(c.char_start, c.char_end - c.char_start)), c.text);
}

TEST(PhraseSim, Examples) {
    const auto tax = Taxonomy::parse("mail\temail\n");
    EXPECT_DOUBLE_EQ(phrase_sim("email", "email", tax), 1.0);
    EXPECT_NEAR(phrase_sim("electronic mail", "email", tax), 1.0 / 3.0, 1e-9);
    EXPECT_DOUBLE_EQ(phrase_sim("postal code", "email", tax), 0.0);
}

TEST(Extract, SentenceJoinsItsGroup) {
    const auto doc = parse_structure(
        "<h2>Information We Collect</h2><p>You can share your location with friends. We keep logs.</p>"
        "<h2>Contact Us</h2><p>Write to our email address.</p>");
    const auto groups = extract_segments(doc, KeywordResource::builtin(), Taxonomy{}, nullptr, MatchConfig{});
    const auto& loc = groups[index_of(DataType::Location)];
    ASSERT_FALSE(loc.fallback);
    ASSERT_EQ(loc.sentences.size(), 1u);
    EXPECT_EQ(loc.sentences[0].text, "You can share your location with friends.");
    ASSERT_FALSE(loc.highlights.empty());
    const auto& h = loc.highlights[0];
    EXPECT_EQ(loc.sentences[h.sentence].text.substr(h.char_start, h.char_end - h.char_start), "location");
    // The email sentence sits under a heading that is not relevant.
    EXPECT_TRUE(groups[index_of(DataType::Email)].fallback);
    const auto& voices = groups[index_of(DataType::Voices)];
    EXPECT_TRUE(voices.fallback);
    EXPECT_EQ(voices.text(), kFallbackText);
    for (std::size_t i = 0; i < kDataTypeCount; ++i) EXPECT_EQ(groups[i].data_type, kAllDataTypes[i]);
}

TEST(Extract, NoRelevantSectionsMeansAllFallback) {
    const auto doc = parse_structure("<h2>Cookies</h2><p>We use cookies.</p><h2>Contact Us</h2><p>Email us.</p>");
    const auto groups = extract_segments(doc, KeywordResource::builtin(), Taxonomy{}, nullptr, MatchConfig{});
    EXPECT_EQ(groups, empty_groups());
}

TEST(Extract, ChunkStageUsesTaxonomy) {
    const auto doc = parse_plain_text("We collect your email. We record your whereabouts during trips.");
    const auto tax = Taxonomy::parse("whereabouts\tlocation\n");
    MatchConfig cfg;
    cfg.phrase_sim_threshold = 0.5;
    auto groups = extract_segments(doc, KeywordResource::builtin(), tax, nullptr, cfg);
    // The second sentence has no keyword; its chunk "whereabouts" is one hop
    // from "location".
    const auto& loc = groups[index_of(DataType::Location)];
    ASSERT_FALSE(loc.fallback);
    ASSERT_EQ(loc.highlights.size(), 1u);
    EXPECT_EQ(loc.highlights[0].kind, HighlightKind::NounChunk);
    cfg.use_relevance_stage = false;
    groups = extract_segments(doc, KeywordResource::builtin(), tax, nullptr, cfg);
    EXPECT_TRUE(groups[index_of(DataType::Location)].fallback);
}

TEST(Extract, DuplicateSentencesCollapse) {
    const auto doc = parse_plain_text("We collect your email. We collect your email.");
    const auto groups = extract_segments(doc, KeywordResource::builtin(), Taxonomy{}, nullptr, MatchConfig{});
    EXPECT_EQ(groups[index_of(DataType::Email)].sentences.size(), 1u);
}

TEST(Extract, SentenceMayJoinSeveralGroupsInDocumentOrder) {
    const auto doc = parse_plain_text("We store your location. We share your email and location with partners.");
    const auto groups = extract_segments(doc, KeywordResource::builtin(), Taxonomy{}, nullptr, MatchConfig{});
    const auto& loc = groups[index_of(DataType::Location)];
    ASSERT_EQ(loc.sentences.size(), 2u);
    EXPECT_LT(loc.sentences[0].char_start, loc.sentences[1].char_start);
    ASSERT_EQ(groups[index_of(DataType::Email)].sentences.size(), 1u);
    EXPECT_EQ(groups[index_of(DataType::Email)].sentences[0], loc.sentences[1]);
}
