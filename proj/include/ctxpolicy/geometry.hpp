#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ctxpolicy/types.hpp"

namespace ctxpolicy {

/// Exact non-negative fraction; den > 0.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return double(num) / double(den); }

    friend bool operator==(const Ratio& a, const Ratio& b) { return a.num * b.den == b.num * a.den; }
};

std::optional<BBox> intersection(const BBox& a, const BBox& b);

std::int64_t intersection_area(const BBox& a, const BBox& b);

Ratio iou_exact(const BBox& a, const BBox& b);

inline double iou(const BBox& a, const BBox& b) { return iou_exact(a, b).value(); }

/// Clip to [0,width) x [0,height). Empty result when nothing remains.
std::optional<BBox> clip(const BBox& b, int width, int height);

/// One-to-one prediction/ground-truth pair.
struct Match {
    std::size_t pred = 0;
    std::size_t gt = 0;
    double iou = 0.0;

    friend bool operator==(const Match&, const Match&) = default;
};

/// Greedy max-IoU-first assignment. A pair is eligible only when IoU >= beta
/// and both kind and data type agree. Ties go to the lower prediction index,
/// then the lower ground-truth index.
std::vector<Match> match_boxes(const std::vector<Context>& preds, const std::vector<Context>& gts,
                               const EvalConfig& cfg);

}  // namespace ctxpolicy
