#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctxpolicy/dataset.hpp"
#include "ctxpolicy/present.hpp"
#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

enum class Task { Textual, Iconic, Overall, Segments };

inline constexpr std::array<Task, 4> kAllTasks = {Task::Textual, Task::Iconic, Task::Overall, Task::Segments};

std::string_view to_string(Task t);

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    /// tp/(tp+fp), 0 when nothing was predicted.
    double precision() const;
    /// tp/(tp+fn), 0 when nothing was expected.
    double recall() const;
    /// tp/(tp+fp+fn), 1 when all three are zero. Detection has no true
    /// negatives, so this is the fraction of agreements among all decisions.
    double accuracy() const;
    bool populated() const { return tp + fp + fn > 0; }

    Counts& operator+=(const Counts& o);
    friend bool operator==(const Counts&, const Counts&) = default;
};

struct Averages {
    double accuracy = 1.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct TaskMetrics {
    std::array<Counts, kDataTypeCount> per_type{};

    Counts& at(DataType t) { return per_type[index_of(t)]; }
    const Counts& at(DataType t) const { return per_type[index_of(t)]; }
    Counts total() const;
    /// Unweighted mean over data types with at least one ground truth or
    /// prediction. With none populated, the metrics of an all-zero count.
    Averages macro() const;

    TaskMetrics& operator+=(const TaskMetrics& o);
    friend bool operator==(const TaskMetrics&, const TaskMetrics&) = default;
};

struct MetricsReport {
    std::array<TaskMetrics, 4> tasks{};
    std::array<bool, 4> present{};  // which tasks were evaluated

    TaskMetrics& at(Task t) { return tasks[std::size_t(t)]; }
    const TaskMetrics& at(Task t) const { return tasks[std::size_t(t)]; }

    MetricsReport& operator+=(const MetricsReport& o);
};

using ContextsByScreenshot = std::map<std::string, std::vector<Context>>;

/// Adds Textual, Iconic and Overall counts for one app. Unknown screenshot
/// ids among the predictions are an InputError.
void accumulate_contexts(const ContextsByScreenshot& preds, const ContextsByScreenshot& gts, const EvalConfig& cfg,
                         MetricsReport& report);

ContextsByScreenshot contexts_by_screenshot(const CppBundle& bundle);
ContextsByScreenshot contexts_by_screenshot(const AppRecord& record);

/// Context metrics over a dataset. Apps without a prediction count every
/// ground truth as FN, with a warning.
MetricsReport eval_contexts(const std::vector<AppRecord>& dataset, const std::map<std::string, CppBundle>& preds,
                            const EvalConfig& cfg, Diagnostics& diag);

/// Phrases of a segment: split at , . ; : ! ? and line breaks, ASCII
/// lowercased, whitespace collapsed, empty phrases dropped.
std::vector<std::string> segment_phrases(const std::vector<std::string>& segment);

/// Length in code points of the longest common contiguous substring.
std::size_t lcs_length(std::string_view a, std::string_view b);

/// (1/min(n,m)) * sum over phrase pairs of lcs/min(len). Unclamped. Empty
/// segments stand for the fallback: two empty segments score 1, one empty
/// segment scores 0.
double segment_sim(const std::vector<std::string>& retrieved, const std::vector<std::string>& truth);

/// Adds Segments counts for one app's twelve groups.
void accumulate_segments(const SegmentGroups& pred, const std::map<DataType, SegmentTruth>& truth,
                         const EvalConfig& cfg, MetricsReport& report, Diagnostics& diag,
                         const std::string& app_id = {});

/// Segment metrics over a dataset. Apps without a prediction count every
/// data type as FN, with a warning.
MetricsReport eval_segments(const std::vector<AppRecord>& dataset, const std::map<std::string, CppBundle>& preds,
                            const EvalConfig& cfg, Diagnostics& diag);

/// Context and segment metrics together, apps evaluated on up to `jobs`
/// threads. Counts and warnings are merged in dataset order.
MetricsReport eval_dataset(const std::vector<AppRecord>& dataset, const std::map<std::string, CppBundle>& preds,
                           const EvalConfig& cfg, int jobs, Diagnostics& diag);

nlohmann::json to_json(const MetricsReport& report);

/// Aligned plain-text table: one block per evaluated task, a row per data
/// type and an average row.
std::string render_table(const MetricsReport& report);

}  // namespace ctxpolicy
