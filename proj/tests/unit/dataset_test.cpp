#include <gtest/gtest.h>

#include <fstream>

#include "ctxpolicy/dataset.hpp"
#include "ctxpolicy/error.hpp"
#include "synth.hpp"

using namespace ctxpolicy;
namespace fs = std::filesystem;

namespace {

class DatasetTest : public ::testing::Test {
protected:
    void SetUp() override {
        root = synth::temp_dir("dataset");
        app = root / "app1";
        annotations = synth::write_sample_app(app);
    }
    void TearDown() override { fs::remove_all(root); }

    void replace(const std::string& from, const std::string& to) {
        auto s = annotations;
        const auto at = s.find(from);
        ASSERT_NE(at, std::string::npos) << from;
        s.replace(at, from.size(), to);
        std::ofstream(app / "annotations.json", std::ios::trunc) << s;
    }

    DatasetError expect_rejected() {
        try {
            load_app(app);
        } catch (const DatasetError& e) {
            return e;
        }
        ADD_FAILURE() << "accepted";
        return DatasetError("", "", "");
    }

    fs::path root, app;
    std::string annotations;
};

}  // namespace

TEST_F(DatasetTest, WellFormedAppLoads) {
    const auto rec = load_app(app);
    EXPECT_EQ(rec.app_id, "app1");
    EXPECT_EQ(rec.policy_path.filename(), "policy.html");
    ASSERT_EQ(rec.screenshots.size(), 2u);
    EXPECT_EQ(rec.screenshots[0].id, "home");
    EXPECT_EQ(rec.screenshots[0].width, 300);
    EXPECT_EQ(rec.screenshots[0].height, 200);
    ASSERT_EQ(rec.contexts.size(), 3u);
    EXPECT_EQ(rec.contexts[0].screenshot_id, "home");
    EXPECT_EQ(rec.contexts[0].bbox, (BBox{10, 20, 120, 30}));
    EXPECT_EQ(rec.contexts[1].kind, ContextKind::Icon);
    EXPECT_EQ(rec.contexts[2].screenshot_id, "menu");
    EXPECT_EQ(rec.segments.size(), 12u);
    EXPECT_FALSE(rec.segments.at(DataType::Email).fallback);
    EXPECT_TRUE(rec.segments.at(DataType::Voices).fallback);
    const auto all = load_dataset(root);
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0], rec);
}

TEST_F(DatasetTest, MissingPolicy) {
    fs::remove(app / "policy.html");
    const auto e = expect_rejected();
    EXPECT_NE(std::string(e.what()).find("policy"), std::string::npos);
    EXPECT_NE(e.file().find("app1"), std::string::npos);
}

TEST_F(DatasetTest, BadBbox) {
    replace("[200, 100, 40, 40]", "[280, 100, 40, 40]");
    EXPECT_EQ(expect_rejected().location(), "contexts[1].bbox");
    replace("[200, 100, 40, 40]", "[200, 100, -4, 40]");
    EXPECT_EQ(expect_rejected().location(), "contexts[1].bbox");
}

TEST_F(DatasetTest, UnknownType) {
    replace("\"data_type\": \"Email\"", "\"data_type\": \"Emails\"");
    EXPECT_EQ(expect_rejected().location(), "contexts[0].data_type");
}

TEST_F(DatasetTest, MissingScreenshot) {
    fs::remove(app / "screenshots" / "menu.jpg");
    const auto e = expect_rejected();
    EXPECT_EQ(e.location(), "contexts[2].screenshot");
    EXPECT_NE(e.file().find("annotations.json"), std::string::npos);
}

TEST_F(DatasetTest, MalformedJson) {
    replace("\"evidence\": \"email\"},", "\"evidence\": \"email\"}");
    const auto e = expect_rejected();
    EXPECT_NE(e.location().find("byte"), std::string::npos) << e.what();
}

TEST_F(DatasetTest, DuplicateSegmentType) {
    replace("\"Profile\": \"FALLBACK\"", "\"Profile\": \"FALLBACK\", \"Email\": \"FALLBACK\"");
    EXPECT_EQ(expect_rejected().location(), "segments.Email");
}

TEST_F(DatasetTest, OtherRejections) {
    replace("\"kind\": \"Text\", \"data_type\": \"Email\"", "\"kind\": \"text\", \"data_type\": \"Email\"");
    EXPECT_EQ(expect_rejected().location(), "contexts[0].kind");
    replace("\"evidence\": \"email\"", "\"evidence\": \"email\", \"note\": 1");
    EXPECT_EQ(expect_rejected().location(), "contexts[0].note");
    replace("\"Voices\": \"FALLBACK\"", "\"Voices\": []");
    EXPECT_EQ(expect_rejected().location(), "segments.Voices");
    replace("\"Voices\": \"FALLBACK\"", "\"Voicez\": \"FALLBACK\"");
    EXPECT_EQ(expect_rejected().location(), "segments.Voicez");
}

TEST_F(DatasetTest, PlainTextPolicyAndDuplicateStems) {
    fs::remove(app / "policy.html");
    std::ofstream(app / "policy.txt") << "We collect your email.\n";
    EXPECT_EQ(load_app(app).policy_path.filename(), "policy.txt");
    fs::copy_file(app / "screenshots" / "home.png", app / "screenshots" / "menu.png");
    EXPECT_THROW(load_app(app), DatasetError);
}

TEST_F(DatasetTest, WriteAppRoundTrip) {
    const auto rec = load_app(app);
    write_app(rec, root / "copy" / "app1");
    auto again = load_app(root / "copy" / "app1");
    EXPECT_EQ(again.contexts, rec.contexts);
    EXPECT_EQ(again.segments, rec.segments);
    EXPECT_EQ(annotations_to_json(again), annotations_to_json(rec));
}

TEST(StrictJson, DuplicateKeysAreLocated) {
    try {
        parse_json_strict(R"({"a": {"b": [1, {"c": 1, "c": 2}]}})", "f.json");
        FAIL();
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.location(), "a.b[1].c");
        EXPECT_EQ(e.file(), "f.json");
    }
    EXPECT_EQ(parse_json_strict(R"({"a": [1, 2]})", "f.json")["a"].size(), 2u);
}
