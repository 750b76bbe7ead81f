#include "ctxpolicy/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Frame {
    bool array = false;
    std::string label;
    std::size_t count = 0;
    std::string pending_key;
    std::set<std::string> keys;
};

std::string path_of(const std::vector<Frame>& frames) {
    std::string out;
    for (const auto& f : frames) {
        if (f.label.empty()) continue;
        if (!out.empty() && f.label.front() != '[') out += '.';
        out += f.label;
    }
    return out;
}

std::string child_label(std::vector<Frame>& frames) {
    if (frames.empty()) return {};
    auto& parent = frames.back();
    if (parent.array) return "[" + std::to_string(parent.count++) + "]";
    return parent.pending_key;
}

bool has_suffix(const fs::path& p, std::initializer_list<const char*> exts) {
    const auto e = text::to_lower(p.extension().string());
    return std::any_of(exts.begin(), exts.end(), [&](const char* x) { return e == x; });
}

std::string indexed(const char* name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; }

const std::set<std::string> kContextFields = {"screenshot", "bbox", "kind", "data_type", "evidence"};

}  // namespace

json parse_json_strict(const std::string& content, const std::string& file) {
    std::vector<Frame> frames;
    json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) -> bool {
        switch (ev) {
            case json::parse_event_t::object_start:
            case json::parse_event_t::array_start: {
                Frame f;
                f.array = ev == json::parse_event_t::array_start;
                f.label = child_label(frames);
                frames.push_back(std::move(f));
                break;
            }
            case json::parse_event_t::object_end:
            case json::parse_event_t::array_end:
                if (!frames.empty()) frames.pop_back();
                break;
            case json::parse_event_t::key: {
                auto& top = frames.back();
                const auto key = parsed.get<std::string>();
                if (!top.keys.insert(key).second) {
                    auto loc = path_of(frames);
                    throw DatasetError(file, loc.empty() ? key : loc + "." + key, "duplicate key \"" + key + "\"");
                }
                top.pending_key = key;
                break;
            }
            case json::parse_event_t::value:
                if (!frames.empty() && frames.back().array) ++frames.back().count;
                break;
        }
        return true;
    };
    try {
        return json::parse(content, cb);
    } catch (const json::parse_error& e) {
        throw DatasetError(file, "byte " + std::to_string(e.byte), "malformed JSON");
    }
}

const ScreenshotRecord* AppRecord::screenshot(const std::string& id) const {
    for (const auto& s : screenshots) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw InputError("write failed for " + path.string());
}

AppRecord load_app(const fs::path& dir) {
    AppRecord rec;
    rec.app_id = dir.filename().string();
    const auto dir_s = dir.string();

    if (fs::is_regular_file(dir / "policy.html")) {
        rec.policy_path = dir / "policy.html";
    } else if (fs::is_regular_file(dir / "policy.txt")) {
        rec.policy_path = dir / "policy.txt";
    } else {
        throw DatasetError(dir_s, "", "missing policy.html or policy.txt");
    }

    const auto shots_dir = dir / "screenshots";
    std::map<std::string, std::string> by_file;  // file name -> id
    if (fs::is_directory(shots_dir)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(shots_dir)) {
            if (e.is_regular_file() && has_suffix(e.path(), {".png", ".jpg", ".jpeg"})) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const cv::Mat img = cv::imread(f.string(), cv::IMREAD_UNCHANGED);
            if (img.empty()) throw DatasetError(f.string(), "", "undecodable screenshot");
            ScreenshotRecord s{f.stem().string(), f, img.cols, img.rows};
            if (rec.screenshot(s.id)) throw DatasetError(f.string(), "", "duplicate screenshot id \"" + s.id + "\"");
            by_file[f.filename().string()] = s.id;
            rec.screenshots.push_back(std::move(s));
        }
        std::sort(rec.screenshots.begin(), rec.screenshots.end(),
                  [](const ScreenshotRecord& a, const ScreenshotRecord& b) { return a.id < b.id; });
    }

    const auto ann_path = dir / "annotations.json";
    const auto ann_file = ann_path.string();
    if (!fs::is_regular_file(ann_path)) throw DatasetError(ann_file, "", "missing annotations.json");
    const auto j = parse_json_strict(read_text_file(ann_path), ann_file);
    if (!j.is_object()) throw DatasetError(ann_file, "", "top level must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "contexts" && key != "segments") throw DatasetError(ann_file, key, "unknown field");
    }

    if (j.contains("contexts")) {
        const auto& arr = j["contexts"];
        if (!arr.is_array()) throw DatasetError(ann_file, "contexts", "must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& cj = arr[i];
            const auto loc = indexed("contexts", i);
            if (!cj.is_object()) throw DatasetError(ann_file, loc, "must be an object");
            for (const auto& [key, _] : cj.items()) {
                if (!kContextFields.count(key)) throw DatasetError(ann_file, loc + "." + key, "unknown field");
            }
            for (const auto& key : kContextFields) {
                if (!cj.contains(key)) throw DatasetError(ann_file, loc + "." + key, "missing field");
            }
            auto str = [&](const char* key) {
                if (!cj[key].is_string()) throw DatasetError(ann_file, loc + "." + key, "must be a string");
                return cj[key].get<std::string>();
            };
            Context c;
            const auto shot = str("screenshot");
            const auto fit = by_file.find(shot);
            if (fit == by_file.end())
                throw DatasetError(ann_file, loc + ".screenshot", "no screenshot named \"" + shot + "\"");
            c.screenshot_id = fit->second;

            const auto kind = str("kind");
            const auto k = parse_context_kind(kind);
            if (!k) throw DatasetError(ann_file, loc + ".kind", "unknown kind \"" + kind + "\"");
            c.kind = *k;

            const auto type = str("data_type");
            const auto t = parse_data_type(type);
            if (!t) throw DatasetError(ann_file, loc + ".data_type", "unknown data type \"" + type + "\"");
            c.data_type = *t;

            c.evidence = str("evidence");
            if (c.evidence.empty()) throw DatasetError(ann_file, loc + ".evidence", "must not be empty");

            const auto& bj = cj["bbox"];
            if (!bj.is_array() || bj.size() != 4 ||
                !std::all_of(bj.begin(), bj.end(), [](const json& v) { return v.is_number_integer(); }))
                throw DatasetError(ann_file, loc + ".bbox", "must be four integers [x,y,w,h]");
            const auto in_range = [](const json& v) {
                const auto n = v.get<long long>();
                return n >= 0 && n <= 1'000'000;
            };
            if (!std::all_of(bj.begin(), bj.end(), in_range))
                throw DatasetError(ann_file, loc + ".bbox", "coordinates must be non-negative");
            c.bbox = {bj[0].get<int>(), bj[1].get<int>(), bj[2].get<int>(), bj[3].get<int>()};
            const auto* s = rec.screenshot(c.screenshot_id);
            if (!c.bbox.fits(s->width, s->height))
                throw DatasetError(ann_file, loc + ".bbox",
                                   "box " + bj.dump() + " is empty or exceeds the " + std::to_string(s->width) + "x" +
                                       std::to_string(s->height) + " screenshot");
            rec.contexts.push_back(std::move(c));
        }
    }

    if (j.contains("segments")) {
        const auto& sj = j["segments"];
        if (!sj.is_object()) throw DatasetError(ann_file, "segments", "must be an object");
        for (const auto& [key, value] : sj.items()) {
            const auto loc = "segments." + key;
            const auto t = parse_data_type(key);
            if (!t) throw DatasetError(ann_file, loc, "unknown data type \"" + key + "\"");
            SegmentTruth truth;
            if (value.is_string() && value.get<std::string>() == "FALLBACK") {
                truth.fallback = true;
            } else if (value.is_array() && !value.empty()) {
                truth.fallback = false;
                for (std::size_t i = 0; i < value.size(); ++i) {
                    if (!value[i].is_string())
                        throw DatasetError(ann_file, loc + "[" + std::to_string(i) + "]", "must be a string");
                    truth.sentences.push_back(value[i].get<std::string>());
                }
            } else {
                throw DatasetError(ann_file, loc, "must be \"FALLBACK\" or a non-empty sentence list");
            }
            rec.segments[*t] = std::move(truth);
        }
    }
    return rec;
}

std::vector<AppRecord> load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw InputError("dataset root " + root.string() + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<AppRecord> out;
    for (const auto& d : dirs) out.push_back(load_app(d));
    return out;
}

json annotations_to_json(const AppRecord& record) {
    json contexts = json::array();
    for (const auto& c : record.contexts) {
        const auto* s = record.screenshot(c.screenshot_id);
        if (!s) throw InputError("context references unknown screenshot " + c.screenshot_id);
        contexts.push_back({{"screenshot", s->path.filename().string()},
                            {"bbox", to_json(c.bbox)},
                            {"kind", to_string(c.kind)},
                            {"data_type", to_string(c.data_type)},
                            {"evidence", c.evidence}});
    }
    json segments = json::object();
    for (const auto& [t, truth] : record.segments) {
        segments[std::string(to_string(t))] = truth.fallback ? json("FALLBACK") : json(truth.sentences);
    }
    return {{"contexts", contexts}, {"segments", segments}};
}

void write_app(const AppRecord& record, const fs::path& out) {
    fs::create_directories(out / "screenshots");
    fs::copy_file(record.policy_path, out / record.policy_path.filename(), fs::copy_options::overwrite_existing);
    for (const auto& s : record.screenshots) {
        fs::copy_file(s.path, out / "screenshots" / s.path.filename(), fs::copy_options::overwrite_existing);
    }
    write_text_file(out / "annotations.json", canonical_dump(annotations_to_json(record)));
}

void write_bundle(const CppBundle& bundle, const fs::path& out) {
    write_text_file(out, canonical_dump(to_json(bundle)));
}

CppBundle read_bundle(const fs::path& path) {
    const auto file = path.string();
    const auto j = parse_json_strict(read_text_file(path), file);
    try {
        return bundle_from_json(j);
    } catch (const DatasetError&) {
        throw;
    } catch (const InputError& e) {
        throw DatasetError(file, "", e.what());
    }
}

}  // namespace ctxpolicy
