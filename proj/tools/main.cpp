// ctxpolicy command-line entry point.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include "ctxpolicy/config.hpp"
#include "ctxpolicy/dataset.hpp"
#include "ctxpolicy/error.hpp"
#include "ctxpolicy/evaluate.hpp"
#include "ctxpolicy/pipeline.hpp"
#include "ctxpolicy/present.hpp"
#include "ctxpolicy/version.hpp"

namespace fs = std::filesystem;
using namespace ctxpolicy;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitExternal = 2;

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<int> jobs;
};

struct DetectFlags {
    std::vector<std::string> screenshots;
    std::optional<std::string> ocr_adapter;
    std::optional<std::string> text_adapter;
    std::optional<std::string> icon_adapter;
    std::optional<std::string> icon_model;
    std::optional<std::string> keywords;
};

struct ExtractFlags {
    std::optional<std::string> policy;
    std::optional<std::string> policy_url;
    std::optional<std::string> keywords;
    std::optional<std::string> taxonomy;
    std::optional<std::string> nb_model;
    std::optional<std::string> heading_rules;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "key = value settings file")->check(CLI::ExistingFile);
    cmd->add_option("--jobs", f.jobs, "parallel workers")->check(CLI::PositiveNumber);
}

void add_detect(CLI::App* cmd, DetectFlags& f) {
    cmd->add_option("--screenshot", f.screenshots, "screenshot image (repeatable)")->required()->expected(1, -1);
    cmd->add_option("--ocr-adapter", f.ocr_adapter, "OCR adapter command line");
    cmd->add_option("--text-adapter", f.text_adapter, "text-classifier adapter command line");
    cmd->add_option("--icon-adapter", f.icon_adapter, "icon-classifier adapter command line");
    cmd->add_option("--icon-model", f.icon_model, "kNN training directory, one subdirectory per icon class");
}

void add_extract(CLI::App* cmd, ExtractFlags& f, bool with_keywords) {
    auto* p = cmd->add_option("--policy", f.policy, "policy file (.html or .txt)");
    auto* u = cmd->add_option("--policy-url", f.policy_url, "policy URL");
    p->excludes(u);
    if (with_keywords) cmd->add_option("--keywords", f.keywords, "keyword list (DataType<TAB>phrase)");
    cmd->add_option("--taxonomy", f.taxonomy, "hypernym taxonomy (child<TAB>parent)");
    cmd->add_option("--nb-model", f.nb_model, "relevance training sentences");
    cmd->add_option("--heading-rules", f.heading_rules, "heading identifier phrases");
}

RunConfig base_config(const CommonFlags& c) {
    RunConfig cfg;
    if (c.config) load_config_file(cfg, *c.config);
    if (c.jobs) cfg.jobs = *c.jobs;
    return cfg;
}

void apply_detect(RunConfig& cfg, const DetectFlags& f) {
    if (f.ocr_adapter) cfg.ocr_adapter = f.ocr_adapter;
    if (f.text_adapter) cfg.text_adapter = f.text_adapter;
    if (f.icon_adapter) cfg.icon_adapter = f.icon_adapter;
    if (f.icon_model) cfg.icon_model = fs::path(*f.icon_model);
    if (f.keywords) cfg.keywords = fs::path(*f.keywords);
    if (!cfg.ocr_adapter) throw InputError("--ocr-adapter is required (flag or adapter.ocr in --config)");
    for (const auto& s : f.screenshots) {
        if (!fs::is_regular_file(s)) throw InputError("screenshot not found: " + s);
    }
}

std::string apply_extract(RunConfig& cfg, const ExtractFlags& f) {
    if (f.keywords) cfg.keywords = fs::path(*f.keywords);
    if (f.taxonomy) cfg.taxonomy = fs::path(*f.taxonomy);
    if (f.nb_model) cfg.nb_model = fs::path(*f.nb_model);
    if (f.heading_rules) cfg.heading_rules = fs::path(*f.heading_rules);
    if (!cfg.keywords) throw InputError("--keywords is required (flag or resources.keywords in --config)");
    if (!cfg.taxonomy) throw InputError("--taxonomy is required (flag or resources.taxonomy in --config)");
    if (f.policy) return *f.policy;
    if (f.policy_url) return *f.policy_url;
    throw InputError("one of --policy or --policy-url is required");
}

void print_warnings(const Diagnostics& diag) {
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

nlohmann::json screenshots_json(const CppBundle& bundle) {
    auto j = to_json(bundle);
    return {{"screenshots", j["screenshots"]}};
}

void write_png(const fs::path& path, const cv::Mat& image) {
    fs::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), image)) throw InputError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual privacy policy generator for mobile app screenshots"};
    app.set_version_flag("--version", version_line());
    app.require_subcommand(1);

    CommonFlags common;
    DetectFlags detect_flags;
    ExtractFlags extract_flags;
    std::string out;

    auto* detect = app.add_subcommand("detect", "Detect privacy-related contexts in screenshots");
    add_detect(detect, detect_flags);
    detect->add_option("--keywords", detect_flags.keywords, "keyword list (DataType<TAB>phrase)");
    add_common(detect, common);
    detect->add_option("--out", out, "contexts JSON")->required();

    auto* extract = app.add_subcommand("extract", "Extract per-data-type policy segments");
    add_extract(extract, extract_flags, true);
    add_common(extract, common);
    extract->add_option("--out", out, "segment groups JSON")->required();

    std::string app_id;
    bool html = false, overlays = false, reproducible = false;
    auto* generate = app.add_subcommand("generate", "Detect, extract and assemble a contextual privacy policy");
    add_detect(generate, detect_flags);
    add_extract(generate, extract_flags, true);
    add_common(generate, common);
    generate->add_option("--app-id", app_id, "application identifier")->required();
    generate->add_option("--out", out, "output directory")->required();
    generate->add_flag("--html", html, "write report.html");
    generate->add_flag("--overlays", overlays, "write overlays/<screenshot>.png");
    generate->add_flag("--reproducible", reproducible, "record the epoch as generation time");

    std::string dataset_root, pred_dir, format = "json";
    std::optional<double> beta, segment_threshold;
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against an annotated dataset");
    evaluate->add_option("--dataset", dataset_root, "dataset root")->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--pred", pred_dir, "directory of <app>/bundle.json")->required()->check(
        CLI::ExistingDirectory);
    evaluate->add_option("--beta", beta, "IoU threshold");
    evaluate->add_option("--segment-threshold", segment_threshold, "segment similarity threshold");
    evaluate->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));
    add_common(evaluate, common);
    evaluate->add_option("--out", out, "metrics output")->required();

    std::string bundle_path;
    auto* lack = app.add_subcommand("lack", "List contexts without a matching policy disclosure");
    lack->add_option("--bundle", bundle_path, "bundle.json")->required()->check(CLI::ExistingFile);
    lack->add_option("--out", out, "report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    Diagnostics diag;
    try {
        if (*detect) {
            auto cfg = base_config(common);
            apply_detect(cfg, detect_flags);
            cfg.validate();
            auto setup = make_detection_setup(cfg, diag);
            auto shots = detect_screenshots(as_paths(detect_flags.screenshots), setup.resources, cfg.jobs, diag);
            const auto bundle = assemble_bundle({}, std::move(shots), empty_groups(), {});
            write_text_file(out, canonical_dump(screenshots_json(bundle)));
        } else if (*extract) {
            auto cfg = base_config(common);
            const auto source = apply_extract(cfg, extract_flags);
            cfg.validate();
            const auto res = make_policy_resources(cfg);
            const auto groups = extract_policy(source, res, cfg, diag);
            write_text_file(out, canonical_dump({{"groups", to_json(groups)}}));
        } else if (*generate) {
            auto cfg = base_config(common);
            apply_detect(cfg, detect_flags);
            const auto source = apply_extract(cfg, extract_flags);
            cfg.reproducible = reproducible;
            cfg.validate();
            if (extract_flags.policy && !fs::is_regular_file(source))
                throw InputError("policy file not found: " + source);

            auto setup = make_detection_setup(cfg, diag);
            const auto res = make_policy_resources(cfg);
            const auto images = as_paths(detect_flags.screenshots);
            auto shots = detect_screenshots(images, setup.resources, cfg.jobs, diag);
            auto groups = extract_policy(source, res, cfg, diag);
            const auto bundle = assemble_bundle(app_id, std::move(shots), std::move(groups), make_meta(cfg));

            std::map<std::string, cv::Mat> rendered;
            if (overlays) {
                for (const auto& path : images) {
                    const auto id = screenshot_id_for(path);
                    for (const auto& s : bundle.screenshots) {
                        if (s.screenshot_id == id)
                            rendered[id] = render_overlay(load_image(path), s.contexts, cfg.palette, cfg.overlay, diag);
                    }
                }
            }
            const fs::path dir(out);
            write_bundle(bundle, dir / "bundle.json");
            if (html) write_text_file(dir / "report.html", render_html(bundle));
            for (const auto& [id, image] : rendered) write_png(dir / "overlays" / (id + ".png"), image);
        } else if (*evaluate) {
            auto cfg = base_config(common);
            if (beta) cfg.eval.iou_threshold = *beta;
            if (segment_threshold) cfg.eval.segment_threshold = *segment_threshold;
            cfg.validate();
            const auto dataset = load_dataset(dataset_root);
            std::map<std::string, CppBundle> preds;
            for (const auto& e : fs::directory_iterator(pred_dir)) {
                const auto file = e.path() / "bundle.json";
                if (e.is_directory() && fs::is_regular_file(file)) preds[e.path().filename().string()] = read_bundle(file);
            }
            const auto report = eval_dataset(dataset, preds, cfg.eval, cfg.jobs, diag);
            write_text_file(out, format == "table" ? render_table(report) : canonical_dump(to_json(report)));
        } else if (*lack) {
            const auto bundle = read_bundle(bundle_path);
            write_text_file(out, canonical_dump(to_json(lack_of_disclosure_report(bundle))));
        }
    } catch (const ExternalError& e) {
        print_warnings(diag);
        std::cerr << "error: " << e.what() << "\n";
        return kExitExternal;
    } catch (const std::exception& e) {
        print_warnings(diag);
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    print_warnings(diag);
    return 0;
}
