#include "ctxpolicy/context_detect.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/geometry.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

cv::Mat load_image(const std::filesystem::path& path) {
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) throw InputError("cannot decode image " + path.string());
    return img;
}

namespace {

cv::Mat to_gray(const cv::Mat& image) {
    if (image.channels() == 1) return image;
    cv::Mat gray;
    cv::cvtColor(image, gray, image.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
    return gray;
}

bool box_less(const BBox& a, const BBox& b) {
    return std::tie(a.y, a.x, a.h, a.w) < std::tie(b.y, b.x, b.h, b.w);
}

std::filesystem::path temp_crop_path() {
    static std::atomic<unsigned> counter{0};
    const auto name = "ctxpolicy-crop-" + std::to_string(::getpid()) + "-" +
                      std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) + "-" +
                      std::to_string(counter++) + ".png";
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

std::vector<TextRegion> regions_from_ocr_response(const nlohmann::json& response, int width, int height,
                                                  Diagnostics& diag) {
    std::vector<TextRegion> out;
    for (auto& r : parse_ocr_response(response)) {
        if (text::trim(r.text).empty()) {
            diag.warn("ocr region with blank text dropped: " + response.dump());
            continue;
        }
        const auto clipped = clip(r.bbox, width, height);
        if (!clipped) {
            diag.warn("ocr region '" + r.text + "' lies outside the image and was dropped");
            continue;
        }
        if (*clipped != r.bbox) diag.warn("ocr region '" + r.text + "' clipped to image bounds");
        out.push_back({*clipped, std::move(r.text), r.confidence});
    }
    return out;
}

std::vector<TextRegion> detect_text_regions(const std::filesystem::path& image_path, const cv::Mat& image,
                                            const AdapterSpec& adapter, Diagnostics& diag) {
    if (adapter.role != AdapterRole::Ocr) throw InputError("adapter role must be ocr");
    const auto response = invoke_adapter(adapter, make_ocr_request(image_path.string()));
    return regions_from_ocr_response(response, image.cols, image.rows, diag);
}

std::optional<TextClass> classify_text(const std::string& s, const KeywordResource& keywords,
                                       const AdapterSpec* adapter, Diagnostics& diag) {
    auto keyword_class = classify_text_keywords(s, keywords);
    if (!adapter) return keyword_class;
    try {
        const auto response = invoke_adapter(*adapter, make_text_classifier_request(s));
        if (auto t = parse_text_classifier_response(response)) {
            if (keyword_class && keyword_class->type == *t) return keyword_class;
            return TextClass{*t, text::collapse_whitespace(s)};
        }
    } catch (const ExternalError& e) {
        diag.warn(std::string("text classifier failed, using keywords: ") + e.what());
    }
    return keyword_class;
}

void LocalizerParams::validate() const {
    if (!(min_area_ratio > 0.0 && min_area_ratio < max_area_ratio && max_area_ratio < 1.0))
        throw InputError("localizer area ratios must satisfy 0 < min < max < 1");
    if (!(min_squareness > 0.0 && min_squareness <= 1.0)) throw InputError("min_squareness must lie in (0,1]");
    if (!(ocr_overlap_ratio >= 0.0 && ocr_overlap_ratio <= 1.0))
        throw InputError("ocr_overlap_ratio must lie in [0,1]");
    if (binarize_block < 3 || binarize_block % 2 == 0) throw InputError("binarize_block must be odd and >= 3");
}

std::vector<BBox> component_boxes(const cv::Mat& image, const LocalizerParams& params) {
    params.validate();
    const cv::Mat gray = to_gray(image);
    cv::Mat binary;
    cv::adaptiveThreshold(gray, binary, 255, cv::ADAPTIVE_THRESH_MEAN_C, cv::THRESH_BINARY_INV,
                          params.binarize_block, params.binarize_offset);
    cv::Mat labels, stats, centroids;
    const int n = cv::connectedComponentsWithStats(binary, labels, stats, centroids, 8, CV_32S);
    std::vector<BBox> out;
    out.reserve(std::size_t(std::max(0, n - 1)));
    for (int i = 1; i < n; ++i) {
        out.push_back({stats.at<int>(i, cv::CC_STAT_LEFT), stats.at<int>(i, cv::CC_STAT_TOP),
                       stats.at<int>(i, cv::CC_STAT_WIDTH), stats.at<int>(i, cv::CC_STAT_HEIGHT)});
    }
    return out;
}

std::vector<BBox> filter_icon_candidates(std::vector<BBox> boxes, int width, int height,
                                         const std::vector<TextRegion>& ocr, const LocalizerParams& params) {
    const double total = double(width) * double(height);
    std::vector<BBox> out;
    for (const auto& b : boxes) {
        const double ratio = double(b.area()) / total;
        if (ratio > params.max_area_ratio) continue;  // (a)
        if (ratio < params.min_area_ratio) continue;  // (b)
        const double squareness = double(std::min(b.w, b.h)) / double(std::max(b.w, b.h));
        if (squareness < params.min_squareness) continue;  // (c)
        const bool covered = std::any_of(ocr.begin(), ocr.end(), [&](const TextRegion& r) {
            return double(intersection_area(b, r.bbox)) > params.ocr_overlap_ratio * double(b.area());
        });
        if (covered) continue;  // (d)
        out.push_back(b);
    }
    std::sort(out.begin(), out.end(), box_less);
    return out;
}

std::vector<BBox> localize_icons(const cv::Mat& image, const std::vector<TextRegion>& ocr,
                                 const LocalizerParams& params) {
    return filter_icon_candidates(component_boxes(image, params), image.cols, image.rows, ocr, params);
}

IconClassMap IconClassMap::builtin() {
    IconClassMap m;
    m.set("Call", DataType::Phone);
    m.set("Email", DataType::Email);
    m.set("Avatar", DataType::Profile);
    m.set("Group", DataType::Contacts);
    m.set("Follow", DataType::Contacts);
    m.set("Location", DataType::Location);
    m.set("LocationCrosshair", DataType::Location);
    m.set("Photo", DataType::Photos);
    m.set("Wallpaper", DataType::Photos);
    m.set("Videocam", DataType::Photos);
    m.set("Microphone", DataType::Voices);
    m.set("Cart", DataType::FinancialInfo);
    m.set("Facebook", DataType::SocialMedia);
    m.set("Twitter", DataType::SocialMedia);
    return m;
}

std::optional<DataType> IconClassMap::lookup(const std::string& icon_class) const {
    auto it = map_.find(icon_class);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> IconClassMap::classes() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : map_) out.push_back(k);
    return out;
}

std::vector<float> icon_features(const cv::Mat& crop, int side) {
    if (crop.empty()) throw InputError("cannot compute features of an empty crop");
    const cv::Mat gray = to_gray(crop);
    cv::Mat small;
    cv::resize(gray, small, cv::Size(side, side), 0, 0, cv::INTER_AREA);
    std::vector<float> out;
    out.reserve(std::size_t(side) * std::size_t(side));
    for (int y = 0; y < side; ++y) {
        const auto* row = small.ptr<std::uint8_t>(y);
        for (int x = 0; x < side; ++x) out.push_back(float(row[x]) / 255.0f);
    }
    return out;
}

KnnModel::KnnModel(int k, int side) : k_(k), side_(side) {
    if (k < 1) throw InputError("k must be at least 1");
    if (side < 1) throw InputError("feature side must be at least 1");
}

void KnnModel::add(const cv::Mat& image, std::string label) { add_features(icon_features(image, side_), std::move(label)); }

void KnnModel::add_features(std::vector<float> features, std::string label) {
    if (features.size() != std::size_t(side_) * std::size_t(side_))
        throw InputError("feature vector length does not match side^2");
    samples_.push_back({std::move(features), std::move(label)});
}

KnnPrediction KnnModel::predict(const cv::Mat& crop) const { return predict_features(icon_features(crop, side_)); }

KnnPrediction KnnModel::predict_features(const std::vector<float>& features) const {
    if (samples_.empty()) throw InputError("kNN model has no training samples");
    if (features.size() != std::size_t(side_) * std::size_t(side_))
        throw InputError("feature vector length does not match side^2");

    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        double d2 = 0.0;
        const auto& f = samples_[i].features;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double diff = double(f[j]) - double(features[j]);
            d2 += diff * diff;
        }
        dist.emplace_back(d2, i);
    }
    const std::size_t k = std::min<std::size_t>(std::size_t(k_), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(k), dist.end());

    struct Tally {
        int votes = 0;
        double closest = 0.0;
    };
    std::map<std::string, Tally> tally;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& label = samples_[dist[i].second].label;
        auto [it, fresh] = tally.try_emplace(label, Tally{0, dist[i].first});
        ++it->second.votes;
    }
    const std::string* winner = nullptr;
    const Tally* best = nullptr;
    for (const auto& [label, t] : tally) {
        if (!best || t.votes > best->votes || (t.votes == best->votes && t.closest < best->closest)) {
            winner = &label;
            best = &t;
        }
    }
    return {*winner, double(best->votes) / double(k_), std::sqrt(dist.front().first)};
}

KnnModel train_knn(const std::filesystem::path& root, int k, int side, Diagnostics& diag) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw InputError("icon training directory not found: " + root.string());
    std::vector<fs::path> class_dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) class_dirs.push_back(e.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.size() < 2) throw InputError("icon training directory needs at least two classes: " + root.string());

    KnnModel model(k, side);
    for (const auto& dir : class_dirs) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            const auto ext = text::to_lower(e.path().extension().string());
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::size_t added = 0;
        for (const auto& f : files) {
            cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
            if (img.empty()) {
                diag.warn("skipping undecodable icon image " + f.string());
                continue;
            }
            model.add(img, dir.filename().string());
            ++added;
        }
        if (added == 0) throw InputError("icon class folder has no usable images: " + dir.string());
    }
    return model;
}

std::optional<IconClass> classify_icon(const cv::Mat& crop, const KnnModel* model, const IconClassMap& class_map,
                                       const AdapterSpec* adapter, Diagnostics& diag) {
    std::string label;
    double score = 0.0;
    if (adapter) {
        const auto path = temp_crop_path();
        if (!cv::imwrite(path.string(), crop)) throw AdapterError("cannot write icon crop", path.string());
        nlohmann::json response;
        try {
            response = invoke_adapter(*adapter, make_icon_classifier_request(path.string(), class_map.classes()));
        } catch (...) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
            throw;
        }
        std::error_code ec;
        std::filesystem::remove(path, ec);
        const auto r = parse_icon_classifier_response(response);
        if (!r.class_name) return std::nullopt;
        label = *r.class_name;
        score = r.score;
    } else {
        if (!model || model->empty()) throw InputError("icon classification needs a trained model or an adapter");
        auto p = model->predict(crop);
        label = std::move(p.label);
        score = p.score;
    }
    const auto type = class_map.lookup(label);
    if (!type) {
        diag.warn("icon class '" + label + "' has no data type; candidate discarded");
        return std::nullopt;
    }
    return IconClass{label, *type, score};
}

std::vector<Context> detect_contexts_from_regions(const std::string& screenshot_id, const cv::Mat& image,
                                                  const std::vector<TextRegion>& regions,
                                                  const DetectionResources& res, Diagnostics& diag) {
    std::vector<Context> text_ctx;
    const AdapterSpec* text_adapter = res.text_classifier ? &*res.text_classifier : nullptr;
    for (const auto& r : regions) {
        auto c = classify_text(r.text, res.keywords, text_adapter, diag);
        if (!c) continue;
        text_ctx.push_back({screenshot_id, r.bbox, ContextKind::Text, c->type, c->phrase,
                            std::clamp(r.confidence, 0.0, 1.0)});
    }

    std::vector<Context> icon_ctx;
    const AdapterSpec* icon_adapter = res.icon_classifier ? &*res.icon_classifier : nullptr;
    if (!icon_adapter && (!res.model || res.model->empty())) {
        diag.warn("no icon model or icon adapter; icon contexts skipped for " + screenshot_id);
    } else {
        for (const auto& b : localize_icons(image, regions, res.params)) {
            const cv::Mat crop = image(cv::Rect(b.x, b.y, b.w, b.h));
            auto c = classify_icon(crop, res.model, res.class_map, icon_adapter, diag);
            if (!c) continue;
            icon_ctx.push_back({screenshot_id, b, ContextKind::Icon, c->data_type, c->icon_class,
                                std::clamp(c->score, 0.0, 1.0)});
        }
    }

    auto by_position = [](const Context& a, const Context& b) { return box_less(a.bbox, b.bbox); };
    std::stable_sort(text_ctx.begin(), text_ctx.end(), by_position);
    std::stable_sort(icon_ctx.begin(), icon_ctx.end(), by_position);
    text_ctx.insert(text_ctx.end(), icon_ctx.begin(), icon_ctx.end());
    return text_ctx;
}

std::vector<Context> detect_contexts(const std::string& screenshot_id, const std::filesystem::path& image_path,
                                     const cv::Mat& image, const DetectionResources& res, Diagnostics& diag) {
    const auto regions = detect_text_regions(image_path, image, res.ocr, diag);
    return detect_contexts_from_regions(screenshot_id, image, regions, res, diag);
}

}  // namespace ctxpolicy
