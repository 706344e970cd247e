#include <kamsort/metrics.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace kamsort::metrics {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct FrameData {
    std::vector<std::size_t> gt;    // dense gt id indices
    std::vector<BBox> gt_boxes;
    std::vector<std::size_t> pred;  // dense pred id indices
    std::vector<BBox> pred_boxes;
};

// Frames keyed by index, ids compacted to 0..n-1.
struct Sequence {
    std::map<int, FrameData> frames;
    std::size_t num_gt_ids = 0;
    std::size_t num_pred_ids = 0;
    long gt_count = 0;
    long pred_count = 0;
};

Sequence prepare(const MotTable& gt, const MotTable& pred) {
    validate_track_table(gt, "ground truth");
    validate_track_table(pred, "predictions");
    Sequence seq;
    std::map<int, std::size_t> gt_ids, pred_ids;
    for (const auto& r : gt) {
        auto [it, fresh] = gt_ids.try_emplace(r.id, gt_ids.size());
        auto& f = seq.frames[r.frame];
        f.gt.push_back(it->second);
        f.gt_boxes.push_back(r.box);
    }
    for (const auto& r : pred) {
        auto [it, fresh] = pred_ids.try_emplace(r.id, pred_ids.size());
        auto& f = seq.frames[r.frame];
        f.pred.push_back(it->second);
        f.pred_boxes.push_back(r.box);
    }
    seq.num_gt_ids = gt_ids.size();
    seq.num_pred_ids = pred_ids.size();
    seq.gt_count = static_cast<long>(gt.size());
    seq.pred_count = static_cast<long>(pred.size());
    if (seq.gt_count == 0) {
        throw EmptyGroundTruth();
    }
    return seq;
}

}  // namespace

void validate_track_table(const MotTable& table, const std::string& name) {
    std::set<std::pair<int, int>> seen;
    for (const auto& r : table) {
        if (!seen.emplace(r.frame, r.id).second) {
            throw InputError(name + ": duplicate (frame " + std::to_string(r.frame) + ", id " +
                             std::to_string(r.id) + ")");
        }
    }
}

ClearResult eval_clear(const MotTable& gt, const MotTable& pred, double iou_threshold) {
    const Sequence seq = prepare(gt, pred);
    ClearResult res;
    res.gt_count = seq.gt_count;
    constexpr long kNone = -1;
    std::vector<long> last_match(seq.num_gt_ids, kNone);  // last pred id ever matched
    std::vector<long> prev_frame(seq.num_gt_ids, kNone);  // pred id matched in the previous frame
    int prev_frame_index = std::numeric_limits<int>::min();

    for (const auto& [frame, f] : seq.frames) {
        if (frame != prev_frame_index + 1) {
            std::fill(prev_frame.begin(), prev_frame.end(), kNone);
        }
        prev_frame_index = frame;
        const std::size_t ng = f.gt.size();
        const std::size_t np = f.pred.size();
        std::vector<long> now(seq.num_gt_ids, kNone);
        if (ng == 0 || np == 0) {
            res.fn += static_cast<long>(ng);
            res.fp += static_cast<long>(np);
            prev_frame = now;
            continue;
        }
        const Matrix sim = iou_matrix(f.gt_boxes, f.pred_boxes);
        std::vector<long> row_match(ng, -1);
        std::vector<char> col_used(np, 0);

        // Continuation first.
        for (std::size_t i = 0; i < ng; ++i) {
            const long want = prev_frame[f.gt[i]];
            if (want == kNone) continue;
            for (std::size_t j = 0; j < np; ++j) {
                if (!col_used[j] && static_cast<long>(f.pred[j]) == want && sim(i, j) >= iou_threshold - kEps) {
                    row_match[i] = static_cast<long>(j);
                    col_used[j] = 1;
                    break;
                }
            }
        }
        std::vector<std::size_t> rows, cols;
        for (std::size_t i = 0; i < ng; ++i) if (row_match[i] < 0) rows.push_back(i);
        for (std::size_t j = 0; j < np; ++j) if (!col_used[j]) cols.push_back(j);
        if (!rows.empty() && !cols.empty()) {
            Matrix cost(rows.size(), cols.size());
            for (std::size_t a = 0; a < rows.size(); ++a) {
                for (std::size_t b = 0; b < cols.size(); ++b) {
                    const double s = sim(rows[a], cols[b]);
                    cost(a, b) = s >= iou_threshold - kEps ? 1.0 - s : kForbidden;
                }
            }
            for (const auto& [a, b] : solve_assignment(cost).matches) {
                row_match[rows[a]] = static_cast<long>(cols[b]);
            }
        }
        long matched = 0;
        for (std::size_t i = 0; i < ng; ++i) {
            if (row_match[i] < 0) continue;
            ++matched;
            const std::size_t g = f.gt[i];
            const long p = static_cast<long>(f.pred[static_cast<std::size_t>(row_match[i])]);
            if (last_match[g] != kNone && last_match[g] != p) {
                ++res.idsw;
            }
            last_match[g] = p;
            now[g] = p;
        }
        prev_frame = now;
        res.tp += matched;
        res.fn += static_cast<long>(ng) - matched;
        res.fp += static_cast<long>(np) - matched;
    }
    res.mota = 1.0 - static_cast<double>(res.fn + res.fp + res.idsw) / static_cast<double>(res.gt_count);
    return res;
}

IdentityResult eval_identity(const MotTable& gt, const MotTable& pred, double iou_threshold) {
    const Sequence seq = prepare(gt, pred);
    IdentityResult res;
    if (seq.num_pred_ids == 0) {
        res.idfn = seq.gt_count;
        return res;
    }
    Matrix overlap(seq.num_gt_ids, seq.num_pred_ids);
    for (const auto& [frame, f] : seq.frames) {
        if (f.gt.empty() || f.pred.empty()) continue;
        const Matrix sim = iou_matrix(f.gt_boxes, f.pred_boxes);
        for (std::size_t i = 0; i < f.gt.size(); ++i) {
            for (std::size_t j = 0; j < f.pred.size(); ++j) {
                if (sim(i, j) >= iou_threshold - kEps) overlap(f.gt[i], f.pred[j]) += 1.0;
            }
        }
    }
    Matrix cost(overlap.rows(), overlap.cols());
    for (std::size_t i = 0; i < overlap.rows(); ++i) {
        for (std::size_t j = 0; j < overlap.cols(); ++j) cost(i, j) = -overlap(i, j);
    }
    const auto assign = hungarian(cost);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        if (assign[i] >= 0) res.idtp += static_cast<long>(overlap(i, static_cast<std::size_t>(assign[i])));
    }
    res.idfn = seq.gt_count - res.idtp;
    res.idfp = seq.pred_count - res.idtp;
    res.idf1 = 2.0 * static_cast<double>(res.idtp) / static_cast<double>(seq.gt_count + seq.pred_count);
    return res;
}

double eval_idf1(const MotTable& gt, const MotTable& pred, double iou_threshold) {
    return eval_identity(gt, pred, iou_threshold).idf1;
}

std::vector<double> hota_alphas() {
    std::vector<double> a;
    for (int k = 1; k <= 19; ++k) a.push_back(k * 5 / 100.0);
    return a;
}

HotaResult eval_hota(const MotTable& gt, const MotTable& pred) {
    const Sequence seq = prepare(gt, pred);
    const auto alphas = hota_alphas();
    const std::size_t ng = seq.num_gt_ids;
    const std::size_t np = seq.num_pred_ids;

    // Global alignment between id pairs, from soft per-frame overlaps.
    Matrix potential(ng, np);
    std::vector<double> gt_id_count(ng, 0.0), pred_id_count(np, 0.0);
    std::map<int, Matrix> sims;
    for (const auto& [frame, f] : seq.frames) {
        for (auto g : f.gt) gt_id_count[g] += 1.0;
        for (auto p : f.pred) pred_id_count[p] += 1.0;
        if (f.gt.empty() || f.pred.empty()) continue;
        Matrix sim = iou_matrix(f.gt_boxes, f.pred_boxes);
        std::vector<double> row_sum(f.gt.size(), 0.0), col_sum(f.pred.size(), 0.0);
        for (std::size_t i = 0; i < f.gt.size(); ++i) {
            for (std::size_t j = 0; j < f.pred.size(); ++j) {
                row_sum[i] += sim(i, j);
                col_sum[j] += sim(i, j);
            }
        }
        for (std::size_t i = 0; i < f.gt.size(); ++i) {
            for (std::size_t j = 0; j < f.pred.size(); ++j) {
                const double denom = row_sum[i] + col_sum[j] - sim(i, j);
                if (denom > kEps) potential(f.gt[i], f.pred[j]) += sim(i, j) / denom;
            }
        }
        sims.emplace(frame, std::move(sim));
    }
    Matrix alignment(ng, np);
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t p = 0; p < np; ++p) {
            const double denom = gt_id_count[g] + pred_id_count[p] - potential(g, p);
            alignment(g, p) = denom > kEps ? potential(g, p) / denom : 0.0;
        }
    }

    std::vector<Matrix> match_counts(alphas.size(), Matrix(ng, np));
    std::vector<long> tp(alphas.size(), 0), fn(alphas.size(), 0), fp(alphas.size(), 0);
    for (const auto& [frame, f] : seq.frames) {
        const long fg = static_cast<long>(f.gt.size());
        const long fpn = static_cast<long>(f.pred.size());
        if (fg == 0 || fpn == 0) {
            for (std::size_t a = 0; a < alphas.size(); ++a) {
                fn[a] += fg;
                fp[a] += fpn;
            }
            continue;
        }
        const Matrix& sim = sims.at(frame);
        Matrix cost(sim.rows(), sim.cols());
        for (std::size_t i = 0; i < sim.rows(); ++i) {
            for (std::size_t j = 0; j < sim.cols(); ++j) {
                cost(i, j) = -alignment(f.gt[i], f.pred[j]) * sim(i, j);
            }
        }
        const auto assign = hungarian(cost);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            long matched = 0;
            for (std::size_t i = 0; i < assign.size(); ++i) {
                if (assign[i] < 0) continue;
                const auto j = static_cast<std::size_t>(assign[i]);
                if (sim(i, j) >= alphas[a] - kEps) {
                    ++matched;
                    match_counts[a](f.gt[i], f.pred[j]) += 1.0;
                }
            }
            tp[a] += matched;
            fn[a] += fg - matched;
            fp[a] += fpn - matched;
        }
    }

    HotaResult res;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        AlphaScore s;
        s.alpha = alphas[a];
        s.tp = tp[a];
        s.fn = fn[a];
        s.fp = fp[a];
        double ass_sum = 0.0;
        const Matrix& mc = match_counts[a];
        for (std::size_t g = 0; g < ng; ++g) {
            for (std::size_t p = 0; p < np; ++p) {
                const double c = mc(g, p);
                if (c <= 0.0) continue;
                ass_sum += c * c / (gt_id_count[g] + pred_id_count[p] - c);
            }
        }
        s.assa = ass_sum / static_cast<double>(std::max(1L, s.tp));
        s.deta = static_cast<double>(s.tp) / static_cast<double>(std::max(1L, s.tp + s.fn + s.fp));
        s.hota = std::sqrt(s.deta * s.assa);
        res.per_alpha.push_back(s);
    }
    for (const auto& s : res.per_alpha) {
        res.hota += s.hota;
        res.deta += s.deta;
        res.assa += s.assa;
    }
    const double n = static_cast<double>(res.per_alpha.size());
    res.hota /= n;
    res.deta /= n;
    res.assa /= n;
    return res;
}

EvalReport evaluate(const MotTable& gt, const MotTable& pred) {
    const auto clear = eval_clear(gt, pred);
    const auto ident = eval_identity(gt, pred);
    const auto hota = eval_hota(gt, pred);
    EvalReport r;
    r.hota = hota.hota;
    r.deta = hota.deta;
    r.assa = hota.assa;
    r.per_alpha = hota.per_alpha;
    r.mota = clear.mota;
    r.tp = clear.tp;
    r.fp = clear.fp;
    r.fn = clear.fn;
    r.idsw = clear.idsw;
    r.idf1 = ident.idf1;
    r.idtp = ident.idtp;
    r.gt_count = static_cast<long>(gt.size());
    r.pred_count = static_cast<long>(pred.size());
    return r;
}

EvalReport combine(std::span<const EvalReport> reports) {
    EvalReport out;
    if (reports.empty()) {
        throw EmptyGroundTruth();
    }
    const auto alphas = hota_alphas();
    out.per_alpha.resize(alphas.size());
    std::vector<double> ass_weighted(alphas.size(), 0.0);
    for (const auto& r : reports) {
        out.tp += r.tp;
        out.fp += r.fp;
        out.fn += r.fn;
        out.idsw += r.idsw;
        out.idtp += r.idtp;
        out.gt_count += r.gt_count;
        out.pred_count += r.pred_count;
        for (std::size_t a = 0; a < alphas.size() && a < r.per_alpha.size(); ++a) {
            out.per_alpha[a].tp += r.per_alpha[a].tp;
            out.per_alpha[a].fn += r.per_alpha[a].fn;
            out.per_alpha[a].fp += r.per_alpha[a].fp;
            ass_weighted[a] += r.per_alpha[a].assa * static_cast<double>(r.per_alpha[a].tp);
        }
    }
    if (out.gt_count == 0) {
        throw EmptyGroundTruth();
    }
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        auto& s = out.per_alpha[a];
        s.alpha = alphas[a];
        s.assa = ass_weighted[a] / static_cast<double>(std::max(1L, s.tp));
        s.deta = static_cast<double>(s.tp) / static_cast<double>(std::max(1L, s.tp + s.fn + s.fp));
        s.hota = std::sqrt(s.deta * s.assa);
        out.hota += s.hota / static_cast<double>(alphas.size());
        out.deta += s.deta / static_cast<double>(alphas.size());
        out.assa += s.assa / static_cast<double>(alphas.size());
    }
    out.mota = 1.0 - static_cast<double>(out.fn + out.fp + out.idsw) / static_cast<double>(out.gt_count);
    out.idf1 = 2.0 * static_cast<double>(out.idtp) / static_cast<double>(out.gt_count + out.pred_count);
    return out;
}

std::string report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["hota"] = r.hota;
    j["deta"] = r.deta;
    j["assa"] = r.assa;
    j["mota"] = r.mota;
    j["idf1"] = r.idf1;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["idsw"] = r.idsw;
    j["per_alpha"] = nlohmann::ordered_json::array();
    for (const auto& s : r.per_alpha) {
        j["per_alpha"].push_back({{"alpha", s.alpha}, {"hota", s.hota}, {"deta", s.deta}, {"assa", s.assa}});
    }
    return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& r) {
    std::string out;
    char buf[128];
    auto line = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s: %.6f\n", key, v);
        out += buf;
    };
    auto count = [&](const char* key, long v) {
        std::snprintf(buf, sizeof buf, "%s: %ld\n", key, v);
        out += buf;
    };
    line("hota", r.hota);
    line("deta", r.deta);
    line("assa", r.assa);
    line("mota", r.mota);
    line("idf1", r.idf1);
    count("tp", r.tp);
    count("fp", r.fp);
    count("fn", r.fn);
    count("idsw", r.idsw);
    for (const auto& s : r.per_alpha) {
        std::snprintf(buf, sizeof buf, "alpha_%.2f: hota=%.6f deta=%.6f assa=%.6f\n", s.alpha, s.hota, s.deta,
                      s.assa);
        out += buf;
    }
    return out;
}

}  // namespace kamsort::metrics
