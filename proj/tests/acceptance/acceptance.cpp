// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "ctxpolicy/context_detect.hpp"
#include "ctxpolicy/dataset.hpp"
#include "ctxpolicy/evaluate.hpp"
#include "ctxpolicy/geometry.hpp"
#include "ctxpolicy/keywords.hpp"
#include "ctxpolicy/policy.hpp"
#include "ctxpolicy/taxonomy.hpp"
#include "keyword_cases.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "test_env.hpp"

using namespace ctxpolicy;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kExampleTol = 1e-9;
constexpr double kIouTimeBudgetS = 5.0;
constexpr double kLocalizeTimeBudgetS = 30.0;
constexpr double kLocalizeMinIou = 0.9;
constexpr double kKnnMinAccuracy = 0.9;
constexpr double kMetricTol = 1e-9;
constexpr unsigned kSeed = 20240611u;

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Records the first few failures and keeps counting the rest.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures_;
        if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    Outcome done(const std::string& summary) const {
        if (failures_ == 0) return {true, summary};
        return {false, std::to_string(failures_) + " failure(s): " + notes_};
    }

private:
    int failures_ = 0;
    std::string notes_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

BBox random_box(std::mt19937& rng, int grid) {
    std::uniform_int_distribution<int> pos(0, grid - 1);
    const int x = pos(rng), y = pos(rng);
    std::uniform_int_distribution<int> w(1, grid - x), h(1, grid - y);
    return {x, y, w(rng), h(rng)};
}

Outcome iou_oracle() {
    Check c;
    std::mt19937 rng(kSeed);
    const auto t0 = Clock::now();
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_box(rng, 100), b = random_box(rng, 100);
        const auto [inter, uni] = oracle::iou_counts(a, b);
        const auto r = iou_exact(a, b);
        c.expect(r.num * uni == inter * r.den, "pair " + std::to_string(i));
    }
    const double t = seconds_since(t0);
    c.expect(t < kIouTimeBudgetS, "took " + fmt("%.2fs", t));
    return c.done("1000 pairs exact, " + fmt("%.3fs", t));
}

Outcome segment_sim_fixtures() {
    Check c;
    c.expect(std::abs(segment_sim({"we collect your email address"}, {"we collect your email address"}) - 1.0) <
                 kExampleTol,
             "identical");
    c.expect(std::abs(segment_sim({"we collect your email address when you register"},
                                  {"we collect your email address"}) -
                      1.0) < kExampleTol,
             "containment");
    c.expect(std::abs(segment_sim({"your phone number"}, {"telephone number"}) - 0.75) < kExampleTol, "0.75 case");
    std::mt19937 rng(kSeed);
    static const std::u32string alphabet = U"abcab é中";
    std::uniform_int_distribution<std::size_t> len(0, 30), pick(0, alphabet.size() - 1);
    for (int i = 0; i < 500; ++i) {
        std::u32string a(len(rng), U'a'), b(len(rng), U'a');
        for (auto& ch : a) ch = alphabet[pick(rng)];
        for (auto& ch : b) ch = alphabet[pick(rng)];
        c.expect(lcs_length(oracle::utf8(a), oracle::utf8(b)) == oracle::lcs(a, b), "lcs pair " + std::to_string(i));
    }
    return c.done("3 examples within 1e-9, 500 lcs pairs exact");
}

Outcome phrase_sim_fixtures() {
    Check c;
    const auto toy = Taxonomy::parse("mail\temail\n");
    c.expect(phrase_sim("email", "email", toy) == 1.0, "identity");
    c.expect(std::abs(phrase_sim("electronic mail", "email", toy) - 1.0 / 3.0) < kExampleTol, "toy taxonomy");
    c.expect(phrase_sim("postal code", "email", toy) == 0.0, "missing term");

    auto term = [](std::size_t i) { return "n" + std::to_string(i); };
    std::size_t graphs = 0;
    auto check_graph = [&](std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
        ++graphs;
        Taxonomy tax;
        for (const auto& [a, b] : edges) tax.add_edge(term(a), term(b));
        const auto d = oracle::shortest_paths(n, edges);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double want = 0.0;
                if (i == j) want = 1.0;
                else if (d[i][j]) want = 1.0 / (1.0 + double(*d[i][j]));
                if (path_similarity(term(i), term(j), tax) != want) {
                    c.expect(false, "graph " + std::to_string(graphs) + " pair " + std::to_string(i) + "," +
                                        std::to_string(j));
                    return;
                }
            }
        }
    };
    // Every labelled graph on up to seven nodes.
    for (std::size_t n = 1; n <= 7; ++n) {
        std::vector<std::pair<std::size_t, std::size_t>> all;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
        for (std::uint32_t mask = 0; mask < (1u << all.size()); ++mask) {
            std::vector<std::pair<std::size_t, std::size_t>> edges;
            for (std::size_t e = 0; e < all.size(); ++e)
                if (mask >> e & 1u) edges.push_back(all[e]);
            check_graph(n, edges);
        }
    }
    const std::size_t exhaustive = graphs;
    // Eight nodes (2^28 labelled graphs) is sampled across the density range.
    std::mt19937 rng(kSeed);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    for (std::size_t n = 8; n <= 8; ++n) {
        for (int it = 0; it < 20000; ++it) {
            std::bernoulli_distribution keep(density(rng));
            std::vector<std::pair<std::size_t, std::size_t>> edges;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (keep(rng)) edges.emplace_back(i, j);
            check_graph(n, edges);
        }
    }
    return c.done("examples ok; " + std::to_string(exhaustive) + " graphs (all, n<=7) + " +
                  std::to_string(graphs - exhaustive) + " random (n=8) match the shortest-path oracle");
}

Outcome icon_localization() {
    Check c;
    std::mt19937 rng(kSeed);
    const LocalizerParams params;
    std::size_t glyphs = 0, extra = 0;
    const auto t0 = Clock::now();
    for (int s = 0; s < 50; ++s) {
        const auto screen = synth::random_screen(rng);
        const auto found = localize_icons(screen.image, {}, params);
        for (const auto& g : screen.glyphs) {
            ++glyphs;
            double best = 0.0;
            for (const auto& f : found) best = std::max(best, iou(f, synth::to_bbox(g)));
            c.expect(best >= kLocalizeMinIou, "screen " + std::to_string(s) + " glyph IoU " + fmt("%.3f", best));
        }
        for (const auto& f : found) {
            c.expect(intersection_area(f, synth::to_bbox(screen.banner)) == 0, "banner kept on screen " +
                                                                                    std::to_string(s));
            c.expect(intersection_area(f, synth::to_bbox(screen.bar)) == 0, "bar kept on screen " + std::to_string(s));
            bool planted = false;
            for (const auto& g : screen.glyphs) planted |= iou(f, synth::to_bbox(g)) >= kLocalizeMinIou;
            extra += !planted;
        }
    }
    const double t = seconds_since(t0);
    c.expect(t < kLocalizeTimeBudgetS, "took " + fmt("%.2fs", t));
    return c.done(std::to_string(glyphs) + " glyphs at IoU>=0.9, 50 banners and bars filtered, " +
                  std::to_string(extra) + " other boxes, " + fmt("%.2fs", t));
}

Outcome knn_classifier() {
    Check c;
    const auto dir = synth::temp_dir("accept-knn");
    synth::write_glyph_classes(dir / "train", {{"circle", synth::Glyph::Circle}, {"cross", synth::Glyph::Cross}}, 20,
                               40, kSeed);
    synth::write_glyph_classes(dir / "test", {{"circle", synth::Glyph::Circle}, {"cross", synth::Glyph::Cross}}, 10, 40,
                               kSeed + 1);
    Diagnostics diag;
    const auto model = train_knn(dir / "train", 5, 32, diag);
    int correct = 0, total = 0;
    for (const auto* cls : {"circle", "cross"}) {
        for (const auto& e : fs::directory_iterator(dir / "test" / cls)) {
            ++total;
            correct += model.predict(load_image(e.path())).label == cls;
        }
        for (const auto& e : fs::directory_iterator(dir / "train" / cls)) {
            const auto p = model.predict(load_image(e.path()));
            c.expect(p.nearest_distance == 0.0 && p.label == cls, "self " + e.path().filename().string());
        }
    }
    fs::remove_all(dir);
    const double acc = total ? double(correct) / total : 0.0;
    c.expect(total == 20, "test set size " + std::to_string(total));
    c.expect(acc >= kKnnMinAccuracy, "accuracy " + fmt("%.3f", acc));
    return c.done("accuracy " + fmt("%.2f", acc) + " on 20 held-out crops, 40/40 self-classified at distance 0");
}

Outcome keyword_table() {
    Check c;
    const auto kw = KeywordResource::builtin();
    for (const auto& k : cases::keyword_cases()) {
        const auto got = classify_text_keywords(k.text, kw);
        c.expect(got && got->type == *k.type && text::words(got->phrase) == text::words(k.phrase),
                 std::string("\"") + k.text + "\"");
    }
    for (const auto& k : cases::negative_cases())
        c.expect(!classify_text_keywords(k.text, kw), std::string("negative \"") + k.text + "\"");
    return c.done(std::to_string(cases::keyword_cases().size()) + " cases + " +
                  std::to_string(cases::negative_cases().size()) + " negatives, zero errors");
}

Outcome end_to_end() {
    Check c;
    const auto dir = synth::temp_dir("accept-e2e");
    const auto fx = synth::write_e2e_fixture(dir / "fx");
    auto run = [&](const fs::path& out) {
        return testenv::run_cli({"generate", "--app-id", "demo", "--screenshot", fx.screenshot.string(),
                                 "--ocr-adapter", testenv::replay_spec("e2e.json"), "--icon-model",
                                 fx.icon_model.string(), "--policy", fx.policy.string(), "--keywords",
                                 (testenv::resources_dir() / "keywords.tsv").string(), "--taxonomy",
                                 (testenv::resources_dir() / "taxonomy.tsv").string(), "--out", out.string(),
                                 "--html", "--overlays", "--reproducible"});
    };
    const int rc1 = run(dir / "a"), rc2 = run(dir / "b");
    c.expect(rc1 == 0 && rc2 == 0, "generate exit " + std::to_string(rc1) + "/" + std::to_string(rc2));
    if (rc1 == 0 && rc2 == 0) {
        for (const auto* f : {"bundle.json", "report.html", "overlays/home.png"})
            c.expect(read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f), std::string(f) + " differs");

        const auto bundle = read_bundle(dir / "a" / "bundle.json");
        const auto& ctx = bundle.screenshots.at(0).contexts;
        const auto has = [&](ContextKind k, DataType t) {
            return std::any_of(ctx.begin(), ctx.end(), [&](const Context& x) { return x.kind == k && x.data_type == t; });
        };
        c.expect(ctx.size() == 2, std::to_string(ctx.size()) + " contexts");
        c.expect(has(ContextKind::Text, DataType::Email), "no Email text context");
        c.expect(has(ContextKind::Icon, DataType::Location), "no Location icon context");

        const auto& email = bundle.group(DataType::Email);
        c.expect(!email.fallback && !email.sentences.empty() && email.sentences[0].text == synth::kE2eEmailSentence,
                 "Email group sentence");
        const auto html = read_text_file(dir / "a" / "report.html");
        c.expect(html.find("We collect your <strong>email address</strong> when you create an account.") !=
                     std::string::npos,
                 "bold highlight missing");
        const auto& loc = bundle.group(DataType::Location);
        c.expect(loc.fallback && loc.text() == "No relative information is found in the privacy policy.",
                 "Location fallback text");

        const auto lack = lack_of_disclosure_report(bundle);
        c.expect(lack.total() == 1 && lack.contexts[0].data_type == DataType::Location &&
                     lack.contexts[0].kind == ContextKind::Icon,
                 "lack report");
    }
    fs::remove_all(dir);
    return c.done("Email mapped with bold highlight, Location falls back, lack report = {Location}, "
                  "reproducible runs byte-identical");
}

Outcome evaluation_harness() {
    Check c;
    auto ctx = [](BBox b, DataType t = DataType::Email) { return Context{"s", b, ContextKind::Text, t, "e", 1.0}; };
    const ContextsByScreenshot gts{{"s", {ctx({0, 0, 10, 10}), ctx({50, 0, 10, 10}), ctx({100, 0, 10, 10})}}};
    const ContextsByScreenshot preds{{"s", {ctx({0, 0, 10, 10}), ctx({50, 0, 10, 10}), ctx({300, 300, 10, 10})}}};
    MetricsReport r;
    accumulate_contexts(preds, gts, {}, r);
    const auto k = r.at(Task::Overall).total();
    c.expect(k == Counts{2, 1, 1}, "hand counts");
    c.expect(std::abs(k.precision() - 2.0 / 3.0) < kMetricTol, "precision");
    c.expect(std::abs(k.recall() - 2.0 / 3.0) < kMetricTol, "recall");
    c.expect(std::abs(k.accuracy() - 0.5) < kMetricTol, "accuracy");

    std::mt19937 rng(kSeed);
    std::uniform_int_distribution<int> pos(0, 60), len(4, 40), n(0, 8), type(0, 11), kind(0, 1);
    auto make = [&] {
        ContextsByScreenshot m;
        auto& v = m["s"];
        const int count = n(rng);
        for (int i = 0; i < count; ++i)
            v.push_back({"s", {pos(rng), pos(rng), len(rng), len(rng)}, ContextKind(kind(rng)),
                         kAllDataTypes[type(rng)], "e", 1.0});
        return m;
    };
    for (int it = 0; it < 200; ++it) {
        const auto g = make(), p = make();
        MetricsReport self;
        accumulate_contexts(g, g, {}, self);
        for (auto task : {Task::Textual, Task::Iconic, Task::Overall})
            for (const auto& cnt : self.at(task).per_type)
                if (cnt.populated())
                    c.expect(cnt.accuracy() == 1.0 && cnt.precision() == 1.0 && cnt.recall() == 1.0,
                             "self-evaluation " + std::to_string(it));
        std::size_t prev = SIZE_MAX;
        for (double beta : {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.0}) {
            EvalConfig cfg;
            cfg.iou_threshold = beta;
            MetricsReport m;
            accumulate_contexts(p, g, cfg, m);
            const auto tp = m.at(Task::Overall).total().tp;
            c.expect(tp <= prev, "beta monotonicity fixture " + std::to_string(it));
            prev = tp;
        }
    }

    // Segments: predictions equal to the truth score one as well.
    std::map<DataType, SegmentTruth> truth;
    auto groups = empty_groups();
    for (auto t : kAllDataTypes) {
        const bool fb = index_of(t) % 3 == 0;
        truth[t] = fb ? SegmentTruth{} : SegmentTruth{false, {"We use your " + std::string(to_string(t)) + "."}};
        if (!fb) {
            groups[index_of(t)].fallback = false;
            groups[index_of(t)].sentences = {{0, 0, 0, 0, truth[t].sentences[0]}};
        }
    }
    MetricsReport seg;
    Diagnostics diag;
    accumulate_segments(groups, truth, {}, seg, diag);
    c.expect(seg.at(Task::Segments).total() == Counts{12, 0, 0}, "segment self-evaluation");
    return c.done("tp=2 fp=1 fn=1 -> P=R=0.6667 A=0.5; self-evaluation all ones; beta-monotone on 200 fixtures");
}

Outcome dataset_loader() {
    Check c;
    const auto root = synth::temp_dir("accept-ds");
    const auto app = root / "app";
    const auto annotations = synth::write_sample_app(app);
    try {
        const auto rec = load_app(app);
        c.expect(rec.contexts.size() == 3 && rec.segments.size() == 12 && rec.screenshots.size() == 2,
                 "well-formed fixture content");
    } catch (const std::exception& e) {
        c.expect(false, std::string("well-formed fixture rejected: ") + e.what());
    }

    auto patched = [&](const std::string& from, const std::string& to) {
        return [=] {
            auto s = annotations;
            s.replace(s.find(from), from.size(), to);
            std::ofstream(app / "annotations.json", std::ios::trunc) << s;
        };
    };
    struct Corruption {
        std::string name;
        std::function<void()> apply;
        std::string location;  // expected; empty means the error names only the file
    };
    const std::vector<Corruption> corruptions = {
        {"missing policy", [&] { fs::remove(app / "policy.html"); }, ""},
        {"bad bbox", patched("[200, 100, 40, 40]", "[280, 100, 40, 40]"), "contexts[1].bbox"},
        {"unknown type", patched("\"data_type\": \"Email\"", "\"data_type\": \"Emails\""), "contexts[0].data_type"},
        {"missing screenshot", [&] { fs::remove(app / "screenshots" / "menu.jpg"); }, "contexts[2].screenshot"},
        {"malformed JSON", patched("\"evidence\": \"email\"},", "\"evidence\": \"email\"}"), "byte"},
        {"duplicate segment type", patched("\"Profile\": \"FALLBACK\"", "\"Profile\": \"FALLBACK\", \"Email\": []"),
         "segments.Email"},
    };
    for (const auto& k : corruptions) {
        fs::remove_all(app);
        synth::write_sample_app(app);
        k.apply();
        try {
            load_app(app);
            c.expect(false, k.name + " accepted");
        } catch (const DatasetError& e) {
            const bool located = k.location.empty() ? !e.file().empty() : e.location().find(k.location) == 0;
            c.expect(located, k.name + " located at '" + e.location() + "'");
        } catch (const std::exception& e) {
            c.expect(false, k.name + " raised an unlocated error: " + e.what());
        }
    }
    fs::remove_all(root);
    return c.done("fixture loads; 6/6 corruptions rejected with file and location");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"IoU oracle", iou_oracle},
        {"segment_sim fixtures", segment_sim_fixtures},
        {"phrase_sim fixtures", phrase_sim_fixtures},
        {"icon localization", icon_localization},
        {"kNN classifier", knn_classifier},
        {"keyword classification", keyword_table},
        {"end-to-end fixture", end_to_end},
        {"evaluation harness", evaluation_harness},
        {"dataset loader", dataset_loader},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
