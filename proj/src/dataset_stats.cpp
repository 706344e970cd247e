#include <kamsort/metrics.hpp>

#include <kamsort/kernels.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace kamsort::metrics {

namespace {

class Accumulator {
public:
    void add(double v) { values_.push_back(v); }
    Stat finish(double scale = 1.0) const {
        Stat s;
        s.count = static_cast<long>(values_.size());
        if (values_.empty()) return s;
        double sum = 0.0;
        for (double v : values_) sum += v * scale;
        s.mean = sum / static_cast<double>(values_.size());
        double sq = 0.0;
        for (double v : values_) {
            const double d = v * scale - s.mean;
            sq += d * d;
        }
        s.std = std::sqrt(sq / static_cast<double>(values_.size()));
        return s;
    }

private:
    std::vector<double> values_;
};

// Pixel i (center i + 0.5) is covered when lo <= i + 0.5 < hi.
std::pair<int, int> pixel_span(double lo, double hi, int limit) {
    const int first = std::max(0, static_cast<int>(std::ceil(lo - 0.5)));
    const int last = std::min(limit - 1, static_cast<int>(std::ceil(hi - 0.5)) - 1);
    return {first, last};
}

// Max per-pixel coverage for one frame's boxes. `grid` is all zeros on entry
// and on exit.
int frame_density(const std::vector<BBox>& boxes, FrameSize size, std::vector<std::int32_t>& grid) {
    int row_lo = size.height;
    int row_hi = -1;
    for (const auto& b : boxes) {
        const auto [x0, x1] = pixel_span(b.x, b.x + b.w, size.width);
        const auto [y0, y1] = pixel_span(b.y, b.y + b.h, size.height);
        if (x0 > x1 || y0 > y1) continue;
        row_lo = std::min(row_lo, y0);
        row_hi = std::max(row_hi, y1);
        for (int y = y0; y <= y1; ++y) {
            kernels::increment({grid.data() + static_cast<std::size_t>(y) * size.width + x0,
                                static_cast<std::size_t>(x1 - x0 + 1)});
        }
    }
    if (row_hi < row_lo) return 0;
    const auto w = static_cast<std::size_t>(size.width);
    std::span<std::int32_t> touched{grid.data() + static_cast<std::size_t>(row_lo) * w,
                                    static_cast<std::size_t>(row_hi - row_lo + 1) * w};
    const int peak = kernels::max_value(touched);
    std::fill(touched.begin(), touched.end(), 0);
    return peak;
}

}  // namespace

DatasetStats dataset_stats(const MotTable& gt, std::span<const std::optional<Embedding>> embeddings,
                           FrameSize frame_size, int num_frames) {
    if (frame_size.width <= 0 || frame_size.height <= 0) {
        throw InputError("dataset_stats: frame size must be positive");
    }
    const bool with_app = !embeddings.empty();
    if (with_app && embeddings.size() != gt.size()) {
        throw InputError("dataset_stats: embeddings must align with ground-truth rows");
    }

    std::map<int, std::vector<std::size_t>> frames;
    std::map<int, std::vector<std::size_t>> tracks;
    for (std::size_t k = 0; k < gt.size(); ++k) {
        frames[gt[k].frame].push_back(k);
        tracks[gt[k].id].push_back(k);
    }
    int last = num_frames;
    if (!frames.empty()) last = std::max(last, frames.rbegin()->first);

    Accumulator obj, app, den, occ, mot;
    for (int t = 1; t <= last; ++t) {
        const auto it = frames.find(t);
        obj.add(it == frames.end() ? 0.0 : static_cast<double>(it->second.size()));
    }

    std::vector<std::int32_t> grid(static_cast<std::size_t>(frame_size.width) * frame_size.height, 0);
    for (const auto& [frame, rows] : frames) {
        std::vector<BBox> boxes;
        boxes.reserve(rows.size());
        for (auto k : rows) boxes.push_back(gt[k].box);
        den.add(frame_density(boxes, frame_size, grid));

        const Matrix ious = iou_matrix(boxes, boxes);
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                occ.add(ious(i, j));
                if (with_app) {
                    const auto& a = embeddings[rows[i]];
                    const auto& b = embeddings[rows[j]];
                    if (a && b) app.add(cosine_similarity(*a, *b));
                }
            }
        }
    }

    for (auto& [id, rows] : tracks) {
        std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return gt[a].frame < gt[b].frame; });
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            mot.add(iou(gt[rows[i]].box, gt[rows[i + 1]].box));
        }
    }

    DatasetStats s;
    s.obj = obj.finish();
    s.den = den.finish();
    s.occ = occ.finish(100.0);
    s.mot = mot.finish(100.0);
    if (with_app) s.app = app.finish(100.0);
    return s;
}

std::string stats_json(const DatasetStats& s) {
    nlohmann::ordered_json j;
    auto put = [&](const char* key, const Stat& st) {
        j[key] = {{"mean", st.mean}, {"std", st.std}, {"count", st.count}};
    };
    put("obj", s.obj);
    if (s.app) {
        put("app", *s.app);
    } else {
        j["app"] = nullptr;
    }
    put("den", s.den);
    put("occ", s.occ);
    put("mot", s.mot);
    return j.dump(2) + "\n";
}

}  // namespace kamsort::metrics
