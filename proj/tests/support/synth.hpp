#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ctxpolicy/types.hpp"

namespace synth {

enum class Glyph { Circle, Cross, Square, Ring, Crosshair, Diamond };

inline constexpr Glyph kAllGlyphs[] = {Glyph::Circle, Glyph::Cross,     Glyph::Square,
                                       Glyph::Ring,   Glyph::Crosshair, Glyph::Diamond};

/// Rasterizes a glyph whose ink touches all four sides of `box`, so the
/// ink bounding box equals `box`. Every glyph is one 8-connected piece.
void draw_glyph(cv::Mat& img, Glyph g, const cv::Rect& box, const cv::Scalar& ink, int stroke = 3);

/// Tight square crop of a glyph on white, with jittered stroke and ink.
cv::Mat glyph_sample(Glyph g, int side, std::mt19937& rng);

struct Screen {
    cv::Mat image;
    std::vector<cv::Rect> glyphs;
    cv::Rect banner;
    cv::Rect bar;
};

/// White 1080x1920 screen with 1-6 glyphs of 20-48 px, one banner above 10%
/// of the area and one thin bar, none touching.
Screen random_screen(std::mt19937& rng);

ctxpolicy::BBox to_bbox(const cv::Rect& r);

/// Writes `count` samples per class under `root/<name>/NNN.png`.
void write_glyph_classes(const std::filesystem::path& root,
                         const std::vector<std::pair<std::string, Glyph>>& classes, int count, int side,
                         unsigned seed);

/// A fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// The end-to-end fixture: a 540x960 screen with the word "Email" drawn at a
/// fixed spot and a location crosshair, a policy that mentions email but
/// not location, and a crosshair/circle icon training set.
struct E2eFixture {
    std::filesystem::path screenshot;
    std::filesystem::path icon_model;
    std::filesystem::path policy;
    cv::Rect email_text;  // ink box of the rendered word
    cv::Rect crosshair;
};

inline constexpr const char* kE2eEmailSentence = "We collect your email address when you create an account.";

E2eFixture write_e2e_fixture(const std::filesystem::path& dir);

/// A 540x960 screen reading "Share your location" and "use your birthday"
/// with a location crosshair, written to `dir/screenshots/share.png`.
struct ShareFixture {
    std::filesystem::path screenshot;
    cv::Rect share_text;
    cv::Rect birthday_text;
    cv::Rect crosshair;
};

ShareFixture write_share_fixture(const std::filesystem::path& dir);

/// A well-formed dataset app: policy.html, screenshots/home.png and
/// screenshots/menu.jpg (300x200 each), and annotations.json with three
/// contexts and all twelve segment entries. Returns the annotations text.
std::string write_sample_app(const std::filesystem::path& app_dir);

}  // namespace synth
