#include <gtest/gtest.h>

#include <fstream>

#include "ctxpolicy/config.hpp"
#include "ctxpolicy/error.hpp"
#include "synth.hpp"
#include "test_env.hpp"

using namespace ctxpolicy;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ConfigText, ParsesKeyValueLines) {
    const auto m = parse_config_text("# comment\n\n a.b = 1 \nc=two words\n", "x.conf");
    EXPECT_EQ(m, (std::map<std::string, std::string>{{"a.b", "1"}, {"c", "two words"}}));
}

TEST(ConfigText, ErrorsNameTheLine) {
    EXPECT_NE(error_of([] { parse_config_text("a = 1\nnot a setting\n", "x.conf"); }).find("x.conf:2"),
              std::string::npos);
    EXPECT_NE(error_of([] { parse_config_text("a = 1\na = 2\n", "x.conf"); }).find("x.conf:2"), std::string::npos);
}

TEST(ApplyConfig, OverridesDefaults) {
    RunConfig cfg;
    apply_config(cfg, {{"localizer.min_squareness", "0.7"},
                       {"eval.iou_threshold", "0.6"},
                       {"eval.double_count_mismatch", "false"},
                       {"match.use_relevance_stage", "no"},
                       {"knn.k", "3"},
                       {"overlay.labels", "off"},
                       {"palette.Email", "#102030"},
                       {"jobs", "4"}});
    EXPECT_DOUBLE_EQ(cfg.localizer.min_squareness, 0.7);
    EXPECT_DOUBLE_EQ(cfg.eval.iou_threshold, 0.6);
    EXPECT_FALSE(cfg.eval.double_count_mismatch);
    EXPECT_FALSE(cfg.match.use_relevance_stage);
    EXPECT_EQ(cfg.knn_k, 3);
    EXPECT_FALSE(cfg.overlay.labels);
    EXPECT_EQ(cfg.palette.rgb[index_of(DataType::Email)], (std::array<std::uint8_t, 3>{0x10, 0x20, 0x30}));
    EXPECT_EQ(cfg.jobs, 4);
}

TEST(ApplyConfig, RejectsUnknownKeysAndBadValues) {
    RunConfig cfg;
    EXPECT_THROW(apply_config(cfg, {{"localizer.bogus", "1"}}), InputError);
    EXPECT_THROW(apply_config(cfg, {{"knn.k", "three"}}), InputError);
    EXPECT_THROW(apply_config(cfg, {{"eval.iou_threshold", "0.5x"}}), InputError);
    EXPECT_THROW(apply_config(cfg, {{"palette.Emails", "#000000"}}), InputError);
    EXPECT_THROW(apply_config(cfg, {{"overlay.labels", "maybe"}}), InputError);
}

TEST(Validate, Ranges) {
    RunConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.match.phrase_sim_threshold = 1.5;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg = {};
    cfg.knn_k = 0;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg = {};
    cfg.jobs = 0;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg = {};
    cfg.taxonomy = "/nonexistent/taxonomy.tsv";
    EXPECT_THROW(cfg.validate(), InputError);
}

TEST(ConfigFile, RelativePathsResolveAgainstTheFile) {
    const auto dir = synth::temp_dir("conf");
    fs::create_directories(dir / "res");
    std::ofstream(dir / "res" / "tax.tsv") << "a\tb\n";
    std::ofstream(dir / "run.conf") << "resources.taxonomy = res/tax.tsv\nadapter.timeout_seconds = 7\n";
    RunConfig cfg;
    load_config_file(cfg, dir / "run.conf");
    EXPECT_EQ(*cfg.taxonomy, dir / "res" / "tax.tsv");
    EXPECT_EQ(cfg.adapter_timeout, std::chrono::seconds(7));
    EXPECT_NO_THROW(cfg.validate());
    fs::remove_all(dir);
}

TEST(ConfigFile, ShippedDefaultsMatchBuiltIns) {
    RunConfig shipped;
    load_config_file(shipped, testenv::resources_dir() / "default.conf");
    EXPECT_NO_THROW(shipped.validate());
    RunConfig builtin;
    builtin.keywords = shipped.keywords;
    builtin.taxonomy = shipped.taxonomy;
    builtin.heading_rules = shipped.heading_rules;
    builtin.nb_model = shipped.nb_model;
    builtin.icon_model = shipped.icon_model;
    EXPECT_EQ(shipped.snapshot(), builtin.snapshot());
}

TEST(Snapshot, UsesFileNamesOnly) {
    RunConfig cfg;
    cfg.taxonomy = "/some/where/taxonomy.tsv";
    const auto s = cfg.snapshot();
    EXPECT_EQ(s.dump().find("/some/where"), std::string::npos);
    EXPECT_NE(s.dump().find("taxonomy.tsv"), std::string::npos);
}
