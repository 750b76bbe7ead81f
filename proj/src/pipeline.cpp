#include "ctxpolicy/pipeline.hpp"

#include <atomic>
#include <ctime>
#include <exception>
#include <thread>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/fetch.hpp"
#include "ctxpolicy/text.hpp"
#include "ctxpolicy/version.hpp"

namespace ctxpolicy {

namespace fs = std::filesystem;

std::string screenshot_id_for(const fs::path& image) { return image.stem().string(); }

DetectionSetup make_detection_setup(const RunConfig& cfg, Diagnostics& diag) {
    DetectionSetup s;
    auto& r = s.resources;
    if (cfg.keywords) {
        r.keywords = KeywordResource::load(*cfg.keywords);
        r.keywords.validate();
    }
    r.params = cfg.localizer;
    if (cfg.icon_model) {
        s.model = std::make_unique<KnnModel>(train_knn(*cfg.icon_model, cfg.knn_k, cfg.knn_side, diag));
        r.model = s.model.get();
    }
    if (!cfg.ocr_adapter) throw InputError("an OCR adapter is required");
    r.ocr = AdapterSpec::parse(*cfg.ocr_adapter, AdapterRole::Ocr);
    r.ocr.timeout = cfg.adapter_timeout;
    if (cfg.text_adapter) {
        r.text_classifier = AdapterSpec::parse(*cfg.text_adapter, AdapterRole::TextClassifier);
        r.text_classifier->timeout = cfg.adapter_timeout;
    }
    if (cfg.icon_adapter) {
        r.icon_classifier = AdapterSpec::parse(*cfg.icon_adapter, AdapterRole::IconClassifier);
        r.icon_classifier->timeout = cfg.adapter_timeout;
    }
    return s;
}

std::vector<ScreenshotEntry> detect_screenshots(const std::vector<fs::path>& images, const DetectionResources& res,
                                                int jobs, Diagnostics& diag) {
    const std::size_t n = images.size();
    std::vector<ScreenshotEntry> out(n);
    std::vector<Diagnostics> local(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const auto image = load_image(images[i]);
                const auto id = screenshot_id_for(images[i]);
                out[i] = {id, images[i].filename().string(), detect_contexts(id, images[i], image, res, local[i])};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = std::min<std::size_t>(std::size_t(std::max(1, jobs)), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        for (auto& w : local[i].warnings) diag.warn(std::move(w));
    }
    return out;
}

PolicyResources make_policy_resources(const RunConfig& cfg) {
    PolicyResources r;
    if (cfg.keywords) {
        r.keywords = KeywordResource::load(*cfg.keywords);
        r.keywords.validate();
    }
    if (cfg.taxonomy) r.taxonomy = Taxonomy::load(*cfg.taxonomy);
    if (cfg.nb_model) r.nb = NbModel::load(*cfg.nb_model);
    r.match = cfg.match;
    if (cfg.heading_rules) r.match.heading_rules = load_heading_rules(*cfg.heading_rules);
    return r;
}

PolicyDocument load_policy(std::string_view source, const RunConfig& cfg) {
    const auto fetched = fetch_policy(source, cfg.fetch_timeout, cfg.max_redirects);
    const bool plain = text::to_lower(fs::path(std::string(source)).extension().string()) == ".txt";
    auto doc = plain ? parse_plain_text(fetched.body, fetched.final_location)
                     : parse_structure(fetched.body, fetched.final_location);
    return filter_document_language(std::move(doc));
}

SegmentGroups extract_policy(std::string_view source, const PolicyResources& res, const RunConfig& cfg,
                             Diagnostics& diag) {
    PolicyDocument doc;
    try {
        doc = load_policy(source, cfg);
    } catch (const EmptyDocumentError& e) {
        diag.warn(std::string("policy has no usable text, every data type falls back: ") + e.what());
        return empty_groups();
    }
    if (doc.sections.empty()) {
        diag.warn("policy has no English text, every data type falls back");
        return empty_groups();
    }
    return extract_segments(doc, res.keywords, res.taxonomy, res.nb ? &*res.nb : nullptr, res.match);
}

std::string utc_timestamp(bool epoch) {
    const std::time_t now = epoch ? 0 : std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

BundleMeta make_meta(const RunConfig& cfg) {
    BundleMeta m;
    m.config = cfg.snapshot();
    if (cfg.ocr_adapter) m.adapters["ocr"] = AdapterSpec::parse(*cfg.ocr_adapter, AdapterRole::Ocr).describe();
    if (cfg.text_adapter)
        m.adapters["text_classifier"] = AdapterSpec::parse(*cfg.text_adapter, AdapterRole::TextClassifier).describe();
    if (cfg.icon_adapter)
        m.adapters["icon_classifier"] = AdapterSpec::parse(*cfg.icon_adapter, AdapterRole::IconClassifier).describe();
    m.tool_version = std::string(kToolVersion);
    m.generated_at = utc_timestamp(cfg.reproducible);
    return m;
}

}  // namespace ctxpolicy
