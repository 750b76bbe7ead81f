#include "ctxpolicy/config.hpp"

#include <charconv>
#include <functional>

#include "ctxpolicy/dataset.hpp"
#include "ctxpolicy/error.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

namespace fs = std::filesystem;

namespace {

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw InputError("config key " + key + ": expected a number, got \"" + v + "\"");
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw InputError("config key " + key + ": expected an integer, got \"" + v + "\"");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    const auto s = text::to_lower(v);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw InputError("config key " + key + ": expected a boolean, got \"" + v + "\"");
}

void require_file(const std::optional<fs::path>& p, const char* what) {
    if (p && !fs::is_regular_file(*p)) throw InputError(std::string(what) + " file not found: " + p->string());
}

}  // namespace

void RunConfig::validate() const {
    localizer.validate();
    match.validate();
    eval.validate();
    if (knn_k < 1) throw InputError("knn k must be at least 1");
    if (knn_side < 4 || knn_side > 256) throw InputError("knn side must be in [4,256]");
    if (adapter_timeout.count() < 1) throw InputError("adapter timeout must be positive");
    if (fetch_timeout.count() < 1) throw InputError("fetch timeout must be positive");
    if (max_redirects < 0) throw InputError("max redirects must be non-negative");
    if (overlay.thickness < 1 || overlay.thickness > 50) throw InputError("overlay thickness must be in [1,50]");
    if (jobs < 1) throw InputError("jobs must be at least 1");
    require_file(keywords, "keywords");
    require_file(taxonomy, "taxonomy");
    require_file(heading_rules, "heading rules");
    require_file(nb_model, "naive Bayes model");
    if (icon_model && !fs::is_directory(*icon_model))
        throw InputError("icon model directory not found: " + icon_model->string());
}

nlohmann::json RunConfig::snapshot() const {
    auto name = [](const std::optional<fs::path>& p) -> nlohmann::json {
        return p ? nlohmann::json(p->filename().string()) : nlohmann::json(nullptr);
    };
    nlohmann::json palette_j = nlohmann::json::object();
    for (auto t : kAllDataTypes) palette_j[std::string(to_string(t))] = Palette::format_color(palette.rgb[index_of(t)]);
    return {
        {"localizer",
         {{"max_area_ratio", localizer.max_area_ratio},
          {"min_area_ratio", localizer.min_area_ratio},
          {"min_squareness", localizer.min_squareness},
          {"ocr_overlap_ratio", localizer.ocr_overlap_ratio},
          {"binarize_block", localizer.binarize_block},
          {"binarize_offset", localizer.binarize_offset}}},
        {"match",
         {{"phrase_sim_threshold", match.phrase_sim_threshold}, {"use_relevance_stage", match.use_relevance_stage}}},
        {"knn", {{"k", knn_k}, {"side", knn_side}}},
        {"palette", palette_j},
        {"resources",
         {{"keywords", name(keywords)},
          {"taxonomy", name(taxonomy)},
          {"heading_rules", name(heading_rules)},
          {"nb_model", name(nb_model)},
          {"icon_model", name(icon_model)}}},
    };
}

std::map<std::string, std::string> parse_config_text(std::string_view content, std::string_view origin) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    while (!content.empty()) {
        const auto nl = content.find('\n');
        auto line = content.substr(0, nl);
        content = nl == std::string_view::npos ? std::string_view() : content.substr(nl + 1);
        ++line_no;
        const auto where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
        line = text::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw InputError(where + "expected key = value");
        const std::string key(text::trim(line.substr(0, eq)));
        const std::string value(text::trim(line.substr(eq + 1)));
        if (key.empty()) throw InputError(where + "empty key");
        if (!out.emplace(key, value).second) throw InputError(where + "duplicate key " + key);
    }
    return out;
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& values, const fs::path& base_dir) {
    auto path = [&](const std::string& v) {
        fs::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"localizer.max_area_ratio", [&](auto& k, auto& v) { cfg.localizer.max_area_ratio = to_double(k, v); }},
        {"localizer.min_area_ratio", [&](auto& k, auto& v) { cfg.localizer.min_area_ratio = to_double(k, v); }},
        {"localizer.min_squareness", [&](auto& k, auto& v) { cfg.localizer.min_squareness = to_double(k, v); }},
        {"localizer.ocr_overlap_ratio", [&](auto& k, auto& v) { cfg.localizer.ocr_overlap_ratio = to_double(k, v); }},
        {"localizer.binarize_block", [&](auto& k, auto& v) { cfg.localizer.binarize_block = to_int(k, v); }},
        {"localizer.binarize_offset", [&](auto& k, auto& v) { cfg.localizer.binarize_offset = to_int(k, v); }},
        {"match.phrase_sim_threshold", [&](auto& k, auto& v) { cfg.match.phrase_sim_threshold = to_double(k, v); }},
        {"match.use_relevance_stage", [&](auto& k, auto& v) { cfg.match.use_relevance_stage = to_bool(k, v); }},
        {"eval.iou_threshold", [&](auto& k, auto& v) { cfg.eval.iou_threshold = to_double(k, v); }},
        {"eval.segment_threshold", [&](auto& k, auto& v) { cfg.eval.segment_threshold = to_double(k, v); }},
        {"eval.double_count_mismatch", [&](auto& k, auto& v) { cfg.eval.double_count_mismatch = to_bool(k, v); }},
        {"knn.k", [&](auto& k, auto& v) { cfg.knn_k = to_int(k, v); }},
        {"knn.side", [&](auto& k, auto& v) { cfg.knn_side = to_int(k, v); }},
        {"adapter.timeout_seconds", [&](auto& k, auto& v) { cfg.adapter_timeout = std::chrono::seconds(to_int(k, v)); }},
        {"adapter.ocr", [&](auto&, auto& v) { cfg.ocr_adapter = v; }},
        {"adapter.text_classifier", [&](auto&, auto& v) { cfg.text_adapter = v; }},
        {"adapter.icon_classifier", [&](auto&, auto& v) { cfg.icon_adapter = v; }},
        {"fetch.timeout_seconds", [&](auto& k, auto& v) { cfg.fetch_timeout = std::chrono::seconds(to_int(k, v)); }},
        {"fetch.max_redirects", [&](auto& k, auto& v) { cfg.max_redirects = to_int(k, v); }},
        {"overlay.thickness", [&](auto& k, auto& v) { cfg.overlay.thickness = to_int(k, v); }},
        {"overlay.labels", [&](auto& k, auto& v) { cfg.overlay.labels = to_bool(k, v); }},
        {"jobs", [&](auto& k, auto& v) { cfg.jobs = to_int(k, v); }},
        {"resources.keywords", [&](auto&, auto& v) { cfg.keywords = path(v); }},
        {"resources.taxonomy", [&](auto&, auto& v) { cfg.taxonomy = path(v); }},
        {"resources.heading_rules", [&](auto&, auto& v) { cfg.heading_rules = path(v); }},
        {"resources.nb_model", [&](auto&, auto& v) { cfg.nb_model = path(v); }},
        {"resources.icon_model", [&](auto&, auto& v) { cfg.icon_model = path(v); }},
    };
    for (const auto& [key, value] : values) {
        if (key.rfind("palette.", 0) == 0) {
            const auto t = parse_data_type(std::string_view(key).substr(8));
            if (!t) throw InputError("config key " + key + ": unknown data type");
            cfg.palette.rgb[index_of(*t)] = Palette::parse_color(value);
            continue;
        }
        const auto it = setters.find(key);
        if (it == setters.end()) throw InputError("unknown config key " + key);
        it->second(key, value);
    }
}

void load_config_file(RunConfig& cfg, const fs::path& path) {
    if (!fs::is_regular_file(path)) throw InputError("config file not found: " + path.string());
    const auto values = parse_config_text(read_text_file(path), path.string());
    apply_config(cfg, values, path.parent_path());
}

}  // namespace ctxpolicy
