#pragma once

#include <kamsort/association.hpp>
#include <kamsort/error.hpp>
#include <kamsort/io.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kamsort::metrics {

using io::MotTable;

/// Ground truth has no boxes, so the normalised scores are undefined.
class EmptyGroundTruth : public InputError {
public:
    EmptyGroundTruth() : InputError("ground truth is empty; metrics are undefined") {}
};

/// Throws InputError when a (frame, id) pair repeats.
void validate_track_table(const MotTable& table, const std::string& name);

struct ClearResult {
    double mota = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long idsw = 0;
    long gt_count = 0;
};

/// CLEAR-MOT. Per frame, pairs matched in the previous frame are kept while
/// their IoU stays >= threshold; the rest is matched by Hungarian (most
/// matches, then highest total IoU).
ClearResult eval_clear(const MotTable& gt, const MotTable& pred, double iou_threshold = 0.5);

struct IdentityResult {
    double idf1 = 0.0;
    long idtp = 0;
    long idfp = 0;
    long idfn = 0;
};

IdentityResult eval_identity(const MotTable& gt, const MotTable& pred, double iou_threshold = 0.5);
double eval_idf1(const MotTable& gt, const MotTable& pred, double iou_threshold = 0.5);

struct AlphaScore {
    double alpha = 0.0;
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    long tp = 0;
    long fn = 0;
    long fp = 0;
};

struct HotaResult {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    std::vector<AlphaScore> per_alpha;
};

/// Localisation thresholds 0.05, 0.10, ..., 0.95.
std::vector<double> hota_alphas();

HotaResult eval_hota(const MotTable& gt, const MotTable& pred);

struct EvalReport {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    double mota = 0.0;
    double idf1 = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long idsw = 0;
    std::vector<AlphaScore> per_alpha;
    // Raw counts needed to aggregate sequences.
    long gt_count = 0;
    long pred_count = 0;
    long idtp = 0;
};

EvalReport evaluate(const MotTable& gt, const MotTable& pred);

/// Pool several sequences: detection counts and IDTP are summed, AssA is
/// TP-weighted per alpha.
EvalReport combine(std::span<const EvalReport> reports);

/// JSON with exactly: hota, deta, assa, mota, idf1, tp, fp, fn, idsw, per_alpha.
std::string report_json(const EvalReport& r);
/// `key: value` lines, one per scalar, plus one line per alpha.
std::string report_text(const EvalReport& r);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // population
    long count = 0;
};

struct DatasetStats {
    Stat obj;
    std::optional<Stat> app;  // %, present only with embeddings
    Stat den;
    Stat occ;  // %
    Stat mot;  // %
};

struct FrameSize {
    int width = 0;
    int height = 0;
};

/**
 * Obj: objects per frame over frames 1..N (N = max(num_frames, last gt frame)).
 * Occ / App: every same-frame pair (IoU / cosine similarity), x100.
 * Den: per non-empty frame, the max number of boxes covering one pixel; a pixel
 *      belongs to a box when its center lies inside it (boxes clipped to frame).
 * Mot: IoU of successive boxes of each track, x100.
 * `embeddings` is either empty or aligned with `gt` rows.
 */
DatasetStats dataset_stats(const MotTable& gt, std::span<const std::optional<Embedding>> embeddings,
                           FrameSize frame_size, int num_frames = 0);

std::string stats_json(const DatasetStats& s);

}  // namespace kamsort::metrics
