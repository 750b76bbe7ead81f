#include "ctxpolicy/geometry.hpp"

#include <algorithm>

namespace ctxpolicy {

std::optional<BBox> intersection(const BBox& a, const BBox& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

std::int64_t intersection_area(const BBox& a, const BBox& b) {
    const auto r = intersection(a, b);
    return r ? r->area() : 0;
}

Ratio iou_exact(const BBox& a, const BBox& b) {
    const std::int64_t inter = intersection_area(a, b);
    const std::int64_t uni = a.area() + b.area() - inter;
    if (uni <= 0) return {0, 1};
    return {inter, uni};
}

std::optional<BBox> clip(const BBox& b, int width, int height) {
    const int x0 = std::clamp(b.x, 0, width);
    const int y0 = std::clamp(b.y, 0, height);
    const int x1 = std::clamp(b.right(), 0, width);
    const int y1 = std::clamp(b.bottom(), 0, height);
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

std::vector<Match> match_boxes(const std::vector<Context>& preds, const std::vector<Context>& gts,
                               const EvalConfig& cfg) {
    struct Candidate {
        std::size_t pred;
        std::size_t gt;
        Ratio overlap;
    };

    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < preds.size(); ++p) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (preds[p].kind != gts[g].kind || preds[p].data_type != gts[g].data_type) continue;
            const Ratio r = iou_exact(preds[p].bbox, gts[g].bbox);
            if (r.num == 0 || r.value() < cfg.iou_threshold) continue;
            candidates.push_back({p, g, r});
        }
    }

    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        const std::int64_t lhs = a.overlap.num * b.overlap.den;
        const std::int64_t rhs = b.overlap.num * a.overlap.den;
        if (lhs != rhs) return lhs > rhs;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });

    std::vector<bool> pred_used(preds.size(), false);
    std::vector<bool> gt_used(gts.size(), false);
    std::vector<Match> out;
    for (const auto& c : candidates) {
        if (pred_used[c.pred] || gt_used[c.gt]) continue;
        pred_used[c.pred] = true;
        gt_used[c.gt] = true;
        out.push_back({c.pred, c.gt, c.overlap.value()});
    }
    return out;
}

}  // namespace ctxpolicy
