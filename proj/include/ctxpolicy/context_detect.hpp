#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "ctxpolicy/adapter.hpp"
#include "ctxpolicy/keywords.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

/// Decodes a PNG or JPEG as 8-bit BGR. Throws InputError when undecodable.
cv::Mat load_image(const std::filesystem::path& path);

struct TextRegion {
    BBox bbox;
    std::string text;
    double confidence = 0.0;

    friend bool operator==(const TextRegion&, const TextRegion&) = default;
};

/// Runs the OCR adapter on `image_path` and validates its output. Regions
/// are clipped to the image; clipped, emptied or blank regions are reported
/// in `diag`. Order is preserved.
std::vector<TextRegion> detect_text_regions(const std::filesystem::path& image_path, const cv::Mat& image,
                                            const AdapterSpec& adapter, Diagnostics& diag);

/// Validation and clipping of an OCR adapter response on a width x height
/// image, shared with transcript replays.
std::vector<TextRegion> regions_from_ocr_response(const nlohmann::json& response, int width, int height,
                                                  Diagnostics& diag);

/// Keyword classification, optionally overridden by a text-classifier
/// adapter. Adapter failures fall back to keywords with a warning.
std::optional<TextClass> classify_text(const std::string& text, const KeywordResource& keywords,
                                       const AdapterSpec* adapter, Diagnostics& diag);

struct LocalizerParams {
    double max_area_ratio = 0.10;
    double min_area_ratio = 0.0001;
    double min_squareness = 0.6;
    double ocr_overlap_ratio = 0.5;
    int binarize_block = 31;
    int binarize_offset = 10;

    void validate() const;
};

/// Bounding boxes of 8-connected components after adaptive mean
/// thresholding (dark-on-light foreground).
std::vector<BBox> component_boxes(const cv::Mat& image, const LocalizerParams& params);

/// Icon filtering rules, in order: (a) area ratio above the maximum, (b) area
/// ratio below the minimum, (c) min(w,h)/max(w,h) below the squareness
/// bound, (d) more than `ocr_overlap_ratio` of the box covered by one OCR
/// region. Survivors are sorted by (y, x).
std::vector<BBox> filter_icon_candidates(std::vector<BBox> boxes, int width, int height,
                                         const std::vector<TextRegion>& ocr, const LocalizerParams& params);

std::vector<BBox> localize_icons(const cv::Mat& image, const std::vector<TextRegion>& ocr,
                                 const LocalizerParams& params);

/// Icon-class name to data type. Names outside the map carry no data type.
class IconClassMap {
public:
    static IconClassMap builtin();

    void set(std::string icon_class, DataType type) { map_[std::move(icon_class)] = type; }
    std::optional<DataType> lookup(const std::string& icon_class) const;
    std::vector<std::string> classes() const;

private:
    std::map<std::string, DataType> map_;
};

/// Grayscale, area-averaged to side x side, scaled to [0,1], row-major.
std::vector<float> icon_features(const cv::Mat& crop, int side);

struct KnnSample {
    std::vector<float> features;
    std::string label;
};

struct KnnPrediction {
    std::string label;
    double score = 0.0;             // winner votes / k
    double nearest_distance = 0.0;  // Euclidean distance to the closest sample
};

/// k-nearest-neighbour icon classifier over normalized grayscale pixels.
/// Immutable once trained; safe to share across threads.
class KnnModel {
public:
    KnnModel(int k = 5, int side = 32);

    int k() const { return k_; }
    int side() const { return side_; }
    const std::vector<KnnSample>& samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }

    void add(const cv::Mat& image, std::string label);
    void add_features(std::vector<float> features, std::string label);

    /// Majority vote among the k nearest (Euclidean). Vote ties go to the
    /// class holding the single nearest neighbour among the tied classes.
    KnnPrediction predict(const cv::Mat& crop) const;
    KnnPrediction predict_features(const std::vector<float>& features) const;

private:
    int k_;
    int side_;
    std::vector<KnnSample> samples_;
};

/// Trains from `<root>/<ClassName>/*.{png,jpg,jpeg}` in path order.
/// Undecodable images are skipped with a warning; an empty class or fewer
/// than two classes is an InputError.
KnnModel train_knn(const std::filesystem::path& root, int k, int side, Diagnostics& diag);

struct IconClass {
    std::string icon_class;
    DataType data_type;
    double score = 0.0;
};

/// Classifies a crop with the adapter when given, else with the kNN model.
/// Returns nullopt when the winning class has no data type.
std::optional<IconClass> classify_icon(const cv::Mat& crop, const KnnModel* model, const IconClassMap& class_map,
                                       const AdapterSpec* adapter, Diagnostics& diag);

struct DetectionResources {
    KeywordResource keywords = KeywordResource::builtin();
    IconClassMap class_map = IconClassMap::builtin();
    const KnnModel* model = nullptr;
    LocalizerParams params;
    AdapterSpec ocr;
    std::optional<AdapterSpec> text_classifier;
    std::optional<AdapterSpec> icon_classifier;
};

/// Text contexts (OCR regions with a data type) followed by icon contexts,
/// each group ordered by (y, x).
std::vector<Context> detect_contexts(const std::string& screenshot_id, const std::filesystem::path& image_path,
                                     const cv::Mat& image, const DetectionResources& res, Diagnostics& diag);

/// The same pipeline given already-obtained OCR regions.
std::vector<Context> detect_contexts_from_regions(const std::string& screenshot_id, const cv::Mat& image,
                                                  const std::vector<TextRegion>& regions,
                                                  const DetectionResources& res, Diagnostics& diag);

}  // namespace ctxpolicy
