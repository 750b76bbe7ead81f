#include "ctxpolicy/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/geometry.hpp"
#include "ctxpolicy/text.hpp"

namespace ctxpolicy {

std::string_view to_string(Task t) {
    switch (t) {
        case Task::Textual: return "Textual";
        case Task::Iconic: return "Iconic";
        case Task::Overall: return "Overall";
        case Task::Segments: return "Segments";
    }
    return "unknown";
}

double Counts::precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
double Counts::recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
double Counts::accuracy() const { return tp + fp + fn == 0 ? 1.0 : double(tp) / double(tp + fp + fn); }

Counts& Counts::operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

Counts TaskMetrics::total() const {
    Counts c;
    for (const auto& x : per_type) c += x;
    return c;
}

Averages TaskMetrics::macro() const {
    Averages a{0.0, 0.0, 0.0};
    std::size_t n = 0;
    for (const auto& c : per_type) {
        if (!c.populated()) continue;
        a.accuracy += c.accuracy();
        a.precision += c.precision();
        a.recall += c.recall();
        ++n;
    }
    if (n == 0) return {Counts{}.accuracy(), Counts{}.precision(), Counts{}.recall()};
    a.accuracy /= double(n);
    a.precision /= double(n);
    a.recall /= double(n);
    return a;
}

TaskMetrics& TaskMetrics::operator+=(const TaskMetrics& o) {
    for (std::size_t i = 0; i < kDataTypeCount; ++i) per_type[i] += o.per_type[i];
    return *this;
}

MetricsReport& MetricsReport::operator+=(const MetricsReport& o) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        tasks[i] += o.tasks[i];
        present[i] = present[i] || o.present[i];
    }
    return *this;
}

namespace {

std::vector<Context> of_kind(const std::vector<Context>& all, ContextKind kind) {
    std::vector<Context> out;
    for (const auto& c : all) {
        if (c.kind == kind) out.push_back(c);
    }
    return out;
}

void count_matching(const std::vector<Context>& preds, const std::vector<Context>& gts, const EvalConfig& cfg,
                    TaskMetrics& kind_metrics, TaskMetrics& overall) {
    const auto matches = match_boxes(preds, gts, cfg);
    std::vector<bool> pred_used(preds.size()), gt_used(gts.size());
    for (const auto& m : matches) {
        pred_used[m.pred] = gt_used[m.gt] = true;
        ++kind_metrics.at(gts[m.gt].data_type).tp;
        ++overall.at(gts[m.gt].data_type).tp;
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (pred_used[i]) continue;
        ++kind_metrics.at(preds[i].data_type).fp;
        ++overall.at(preds[i].data_type).fp;
    }
    for (std::size_t i = 0; i < gts.size(); ++i) {
        if (gt_used[i]) continue;
        ++kind_metrics.at(gts[i].data_type).fn;
        ++overall.at(gts[i].data_type).fn;
    }
}

void mark_context_tasks(MetricsReport& report) {
    report.present[std::size_t(Task::Textual)] = true;
    report.present[std::size_t(Task::Iconic)] = true;
    report.present[std::size_t(Task::Overall)] = true;
}

}  // namespace

void accumulate_contexts(const ContextsByScreenshot& preds, const ContextsByScreenshot& gts, const EvalConfig& cfg,
                         MetricsReport& report) {
    for (const auto& [id, _] : preds) {
        if (!gts.count(id)) throw InputError("prediction names unknown screenshot \"" + id + "\"");
    }
    mark_context_tasks(report);
    static const std::vector<Context> kNone;
    for (const auto& [id, gt] : gts) {
        const auto it = preds.find(id);
        const auto& pred = it == preds.end() ? kNone : it->second;
        count_matching(of_kind(pred, ContextKind::Text), of_kind(gt, ContextKind::Text), cfg,
                       report.at(Task::Textual), report.at(Task::Overall));
        count_matching(of_kind(pred, ContextKind::Icon), of_kind(gt, ContextKind::Icon), cfg,
                       report.at(Task::Iconic), report.at(Task::Overall));
    }
}

ContextsByScreenshot contexts_by_screenshot(const CppBundle& bundle) {
    ContextsByScreenshot out;
    for (const auto& s : bundle.screenshots) {
        auto& v = out[s.screenshot_id];
        v.insert(v.end(), s.contexts.begin(), s.contexts.end());
    }
    return out;
}

ContextsByScreenshot contexts_by_screenshot(const AppRecord& record) {
    ContextsByScreenshot out;
    for (const auto& s : record.screenshots) out[s.id];
    for (const auto& c : record.contexts) out[c.screenshot_id].push_back(c);
    return out;
}

MetricsReport eval_contexts(const std::vector<AppRecord>& dataset, const std::map<std::string, CppBundle>& preds,
                            const EvalConfig& cfg, Diagnostics& diag) {
    cfg.validate();
    MetricsReport report;
    mark_context_tasks(report);
    for (const auto& app : dataset) {
        const auto it = preds.find(app.app_id);
        if (it == preds.end()) {
            diag.warn("no prediction for app " + app.app_id + "; all ground truth counted as missed");
            accumulate_contexts({}, contexts_by_screenshot(app), cfg, report);
            continue;
        }
        try {
            accumulate_contexts(contexts_by_screenshot(it->second), contexts_by_screenshot(app), cfg, report);
        } catch (const InputError& e) {
            throw InputError("app " + app.app_id + ": " + e.what());
        }
    }
    for (const auto& [id, _] : preds) {
        if (std::none_of(dataset.begin(), dataset.end(), [&](const AppRecord& a) { return a.app_id == id; }))
            diag.warn("prediction for app " + id + " has no ground truth and is ignored");
    }
    return report;
}

std::vector<std::string> segment_phrases(const std::vector<std::string>& segment) {
    std::vector<std::string> out;
    auto flush = [&](std::string& cur) {
        auto p = text::collapse_whitespace(text::to_lower(cur));
        if (!p.empty()) out.push_back(std::move(p));
        cur.clear();
    };
    for (const auto& s : segment) {
        std::string cur;
        for (char c : s) {
            switch (c) {
                case ',': case '.': case ';': case ':': case '!': case '?': case '\n': case '\r':
                    flush(cur);
                    break;
                default:
                    cur.push_back(c);
            }
        }
        flush(cur);
    }
    return out;
}

namespace {

// Lenient UTF-8 decode: each invalid byte stands for itself.
std::u32string code_points(std::string_view s) {
    std::u32string out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b = static_cast<unsigned char>(s[i]);
        std::size_t len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 0;
        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) ok = (static_cast<unsigned char>(s[i + k]) >> 6) == 0x2;
        if (!ok) {
            out.push_back(0x110000u + b);
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
        for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

}  // namespace

std::size_t lcs_length(std::string_view a, std::string_view b) {
    const auto x = code_points(a);
    const auto y = code_points(b);
    std::vector<std::size_t> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        for (std::size_t j = 1; j <= y.size(); ++j) {
            cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    return best;
}

double segment_sim(const std::vector<std::string>& retrieved, const std::vector<std::string>& truth) {
    const auto p = segment_phrases(retrieved);
    const auto q = segment_phrases(truth);
    if (p.empty() || q.empty()) return p.empty() && q.empty() ? 1.0 : 0.0;
    double sum = 0.0;
    for (const auto& a : p) {
        const auto la = code_points(a).size();
        for (const auto& b : q) {
            const auto lb = code_points(b).size();
            sum += double(lcs_length(a, b)) / double(std::min(la, lb));
        }
    }
    return sum / double(std::min(p.size(), q.size()));
}

void accumulate_segments(const SegmentGroups& pred, const std::map<DataType, SegmentTruth>& truth,
                         const EvalConfig& cfg, MetricsReport& report, Diagnostics& diag, const std::string& app_id) {
    report.present[std::size_t(Task::Segments)] = true;
    auto& m = report.at(Task::Segments);
    for (auto t : kAllDataTypes) {
        const auto& g = pred[index_of(t)];
        SegmentTruth gt;
        if (const auto it = truth.find(t); it != truth.end()) {
            gt = it->second;
        } else {
            diag.warn((app_id.empty() ? std::string() : "app " + app_id + ": ") + "no ground-truth segment for " +
                      std::string(to_string(t)) + "; treated as fallback");
        }
        const bool pred_fb = g.fallback;
        const bool gt_fb = gt.fallback;
        auto& c = m.at(t);
        if (pred_fb && gt_fb) {
            ++c.tp;
        } else if (!pred_fb && gt_fb) {
            ++c.fp;
        } else if (pred_fb && !gt_fb) {
            ++c.fn;
        } else {
            std::vector<std::string> sentences;
            for (const auto& s : g.sentences) sentences.push_back(s.text);
            if (segment_sim(sentences, gt.sentences) >= cfg.segment_threshold) {
                ++c.tp;
            } else {
                ++c.fp;
                if (cfg.double_count_mismatch) ++c.fn;
            }
        }
    }
}

MetricsReport eval_segments(const std::vector<AppRecord>& dataset, const std::map<std::string, CppBundle>& preds,
                            const EvalConfig& cfg, Diagnostics& diag) {
    cfg.validate();
    MetricsReport report;
    report.present[std::size_t(Task::Segments)] = true;
    for (const auto& app : dataset) {
        const auto it = preds.find(app.app_id);
        if (it == preds.end()) {
            diag.warn("no prediction for app " + app.app_id + "; every segment counted as missed");
            for (auto t : kAllDataTypes) ++report.at(Task::Segments).at(t).fn;
            continue;
        }
        accumulate_segments(it->second.groups, app.segments, cfg, report, diag, app.app_id);
    }
    return report;
}

MetricsReport eval_dataset(const std::vector<AppRecord>& dataset, const std::map<std::string, CppBundle>& preds,
                           const EvalConfig& cfg, int jobs, Diagnostics& diag) {
    cfg.validate();
    const std::size_t n = dataset.size();
    std::vector<MetricsReport> reports(n);
    std::vector<Diagnostics> local(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const std::vector<AppRecord> one{dataset[i]};
                std::map<std::string, CppBundle> own;
                if (const auto it = preds.find(dataset[i].app_id); it != preds.end()) own.insert(*it);
                reports[i] += eval_contexts(one, own, cfg, local[i]);
                reports[i] += eval_segments(one, own, cfg, local[i]);
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
    MetricsReport total;
    mark_context_tasks(total);
    total.present[std::size_t(Task::Segments)] = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        total += reports[i];
        for (auto& w : local[i].warnings) diag.warn(std::move(w));
    }
    for (const auto& [id, _] : preds) {
        if (std::none_of(dataset.begin(), dataset.end(), [&](const AppRecord& a) { return a.app_id == id; }))
            diag.warn("prediction for app " + id + " has no ground truth and is ignored");
    }
    return total;
}

nlohmann::json to_json(const MetricsReport& report) {
    using nlohmann::json;
    auto metrics = [](double a, double p, double r) { return json{{"accuracy", a}, {"precision", p}, {"recall", r}}; };
    json tasks = json::object();
    for (auto task : kAllTasks) {
        if (!report.present[std::size_t(task)]) continue;
        const auto& tm = report.at(task);
        json per_type = json::object();
        for (auto t : kAllDataTypes) {
            const auto& c = tm.at(t);
            auto j = metrics(c.accuracy(), c.precision(), c.recall());
            j["tp"] = c.tp;
            j["fp"] = c.fp;
            j["fn"] = c.fn;
            per_type[std::string(to_string(t))] = j;
        }
        const auto total = tm.total();
        auto pooled = metrics(total.accuracy(), total.precision(), total.recall());
        pooled["tp"] = total.tp;
        pooled["fp"] = total.fp;
        pooled["fn"] = total.fn;
        const auto avg = tm.macro();
        tasks[std::string(to_string(task))] = {
            {"per_type", per_type}, {"macro", metrics(avg.accuracy, avg.precision, avg.recall)}, {"pooled", pooled}};
    }
    return {{"accuracy_definition", "tp/(tp+fp+fn)"}, {"tasks", tasks}};
}

std::string render_table(const MetricsReport& report) {
    std::ostringstream o;
    auto row = [&](std::string_view label, double a, double p, double r, const Counts* c) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-15s %8.4f %9.4f %8.4f", std::string(label).c_str(), a, p, r);
        o << buf;
        if (c) {
            std::snprintf(buf, sizeof buf, " %6zu %6zu %6zu", c->tp, c->fp, c->fn);
            o << buf;
        }
        o << "\n";
    };
    bool first = true;
    for (auto task : kAllTasks) {
        if (!report.present[std::size_t(task)]) continue;
        if (!first) o << "\n";
        first = false;
        const auto& tm = report.at(task);
        o << to_string(task) << "\n";
        char head[160];
        std::snprintf(head, sizeof head, "%-15s %8s %9s %8s %6s %6s %6s\n", "Data type", "Accuracy", "Precision",
                      "Recall", "TP", "FP", "FN");
        o << head;
        for (auto t : kAllDataTypes) {
            const auto& c = tm.at(t);
            if (!c.populated()) continue;
            row(to_string(t), c.accuracy(), c.precision(), c.recall(), &c);
        }
        const auto avg = tm.macro();
        row("Average", avg.accuracy, avg.precision, avg.recall, nullptr);
    }
    return o.str();
}

}  // namespace ctxpolicy
