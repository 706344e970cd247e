#include <kamsort/tracker.hpp>

#include <kamsort/error.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace kamsort {

std::string_view mode_name(TrackerMode m) noexcept {
    switch (m) {
        case TrackerMode::Sort: return "sort";
        case TrackerMode::OcSort: return "ocsort";
        case TrackerMode::KamSort: return "kamsort";
        case TrackerMode::KamSortNoKpp: return "kamsort_no_kpp";
        case TrackerMode::KamSortFixedWeights: return "kamsort_fixed_weights";
    }
    return "kamsort";
}

TrackerMode parse_mode(std::string_view name) {
    for (auto m : {TrackerMode::Sort, TrackerMode::OcSort, TrackerMode::KamSort,
                   TrackerMode::KamSortNoKpp, TrackerMode::KamSortFixedWeights}) {
        if (mode_name(m) == name) return m;
    }
    throw InputError("unknown tracker mode '" + std::string(name) + "'");
}

ModeFeatures features(TrackerMode m) noexcept {
    switch (m) {
        case TrackerMode::Sort: return {};
        case TrackerMode::OcSort: return {true, false, false, true, true, false};
        case TrackerMode::KamSort: return {true, true, true, true, true, true};
        case TrackerMode::KamSortNoKpp: return {true, true, true, true, true, false};
        case TrackerMode::KamSortFixedWeights: return {true, true, false, true, true, true};
    }
    return {};
}

void TrackerConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw InputError(std::string("tracker config: ") + what);
    };
    require(theta_deg > 0.0 && theta_deg < 90.0, "theta must lie in (0, 90) degrees");
    require(lambda >= 0.0, "lambda must be >= 0");
    require(gamma >= 0.0, "gamma must be >= 0");
    require(iou_match_threshold >= 0.0 && iou_match_threshold <= 1.0, "iou threshold outside [0, 1]");
    require(second_stage_iou_threshold >= 0.0 && second_stage_iou_threshold <= 1.0,
            "second-stage iou threshold outside [0, 1]");
    require(max_age >= 0, "max_age must be >= 0");
    require(min_hits >= 1, "min_hits must be >= 1");
    require(det_conf_threshold >= 0.0 && det_conf_threshold <= 1.0, "detection confidence threshold outside [0, 1]");
    require(embedding_ema_beta >= 0.0 && embedding_ema_beta <= 1.0, "embedding EMA beta outside [0, 1]");
    kalman.validate();
}

std::vector<std::pair<std::size_t, std::size_t>> kalman_pp_second_stage(
    std::span<const KalmanTrackState> unmatched_tracks, std::span<const BBox> unmatched_dets,
    const KalmanParams& params, double iou_threshold, bool revise) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (unmatched_tracks.empty() || unmatched_dets.empty()) {
        return out;
    }
    std::vector<BBox> boxes;
    boxes.reserve(unmatched_tracks.size());
    for (const auto& st : unmatched_tracks) {
        boxes.push_back(revise ? revised_box(st, params) : st.box());
    }
    const Matrix ious = iou_matrix(boxes, unmatched_dets);
    Matrix cost(ious.rows(), ious.cols());
    for (std::size_t i = 0; i < ious.rows(); ++i) {
        for (std::size_t j = 0; j < ious.cols(); ++j) {
            cost(i, j) = 1.0 - ious(i, j);
        }
    }
    for (const auto& [i, j] : solve_assignment(cost).matches) {
        if (ious(i, j) >= iou_threshold) {
            out.emplace_back(i, j);
        }
    }
    return out;
}

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)), features_(features(config_.mode)) {
    config_.validate();
    theta_rad_ = config_.theta_deg * std::numbers::pi / 180.0;
}

void Tracker::spawn(int frame, const Detection& det) {
    Track t;
    t.id = next_id_++;
    t.state = initiate(det.box, config_.kalman);
    t.last_update_state = t.state;
    t.observations.push_back({frame, det.box});
    t.embedding = det.embedding;
    t.confidence = det.confidence;
    t.hits = 1;
    t.status = (t.hits >= config_.min_hits || frame_count_ <= config_.min_hits)
                   ? TrackStatus::Confirmed
                   : TrackStatus::Tentative;
    tracks_.push_back(std::move(t));
}

StepResult Tracker::step(int frame, std::span<const Detection> detections) {
    if (frame <= last_frame_) {
        throw SequenceError("tracker: frame " + std::to_string(frame) +
                            " does not follow frame " + std::to_string(last_frame_));
    }
    for (const auto& d : detections) {
        if (d.frame != frame) {
            throw SequenceError("tracker: detection for frame " + std::to_string(d.frame) +
                                " passed with frame " + std::to_string(frame));
        }
    }
    last_frame_ = frame;
    ++frame_count_;

    // Detections kept for this frame, as indices into `detections`.
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < detections.size(); ++k) {
        if (detections[k].confidence >= config_.det_conf_threshold) kept.push_back(k);
    }

    for (auto& t : tracks_) {
        t.state = predict(t.state, config_.kalman);
    }

    // Appearance and adaptive weights for the frame.
    bool appearance = features_.appearance && !config_.force_motion_only && !kept.empty();
    if (appearance) {
        const bool all_have = std::all_of(kept.begin(), kept.end(),
                                          [&](std::size_t k) { return detections[k].embedding.has_value(); });
        if (!all_have) {
            appearance = false;
            ++appearance_fallback_frames_;
        }
    }
    AdaptiveWeights weights;  // w_a = 0, w_m = 2
    std::optional<double> fixed_gamma;
    if (appearance) {
        if (features_.adaptive) {
            std::vector<Embedding> embs;
            embs.reserve(kept.size());
            for (auto k : kept) embs.push_back(*detections[k].embedding);
            weights = adaptive_weights(homogeneity(embs).mu_det, theta_rad_);
        } else {
            fixed_gamma = config_.gamma;
        }
    } else if (!features_.adaptive || !features_.appearance) {
        // Non-adaptive modes weigh IoU by one.
        weights.w_m = 1.0;
    }

    std::vector<TrackCue> tcues;
    tcues.reserve(tracks_.size());
    for (const auto& t : tracks_) {
        TrackCue c;
        c.predicted = t.state.box();
        const auto n = t.observations.size();
        if (n >= 2) {
            c.last_two = std::make_pair(CenterState::from_bbox(t.observations[n - 2].box),
                                        CenterState::from_bbox(t.observations[n - 1].box));
        }
        c.embedding = t.embedding ? &*t.embedding : nullptr;
        tcues.push_back(c);
    }
    std::vector<DetectionCue> dcues;
    dcues.reserve(kept.size());
    for (auto k : kept) {
        const auto& d = detections[k];
        dcues.push_back({d.box, d.embedding ? &*d.embedding : nullptr});
    }

    CostTerms terms;
    terms.velocity = features_.velocity;
    terms.appearance = appearance;
    terms.fixed_gamma = fixed_gamma;
    const Matrix cost = build_cost_matrix(tcues, dcues, weights, config_.lambda, terms);

    std::vector<long> track_match(tracks_.size(), -1);  // -> index into kept
    std::vector<char> det_used(kept.size(), 0);
    StepResult result;

    for (const auto& [i, j] : solve_assignment(cost).matches) {
        if (iou(tcues[i].predicted, dcues[j].box) >= config_.iou_match_threshold) {
            track_match[i] = static_cast<long>(j);
            det_used[j] = 1;
        }
    }

    if (features_.second_stage) {
        std::vector<std::size_t> lt, ld;
        std::vector<KalmanTrackState> states;
        std::vector<BBox> boxes;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (track_match[i] < 0) {
                lt.push_back(i);
                states.push_back(tracks_[i].state);
            }
        }
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if (!det_used[j]) {
                ld.push_back(j);
                boxes.push_back(dcues[j].box);
            }
        }
        const auto extra = kalman_pp_second_stage(states, boxes, config_.kalman,
                                                  config_.second_stage_iou_threshold,
                                                  features_.kalman_pp);
        for (const auto& [a, b] : extra) {
            track_match[lt[a]] = static_cast<long>(ld[b]);
            det_used[ld[b]] = 1;
        }
        result.second_stage_matches = extra.size();
    }

    // Updates and lifecycle.
    std::vector<char> keep(tracks_.size(), 1);
    std::vector<char> updated(tracks_.size(), 0);
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        auto& t = tracks_[i];
        if (track_match[i] < 0) {
            ++t.age_since_update;
            if (t.status == TrackStatus::Tentative || t.age_since_update > config_.max_age) {
                keep[i] = 0;
            } else {
                t.status = TrackStatus::Lost;
            }
            continue;
        }
        const std::size_t k = kept[static_cast<std::size_t>(track_match[i])];
        const Detection& d = detections[k];
        if (features_.reupdate && t.age_since_update > 0) {
            t.state = observation_centric_reupdate(t.observations, {frame, d.box},
                                                   t.last_update_state, config_.kalman);
        } else {
            t.state = update(t.state, d.box, config_.kalman);
        }
        t.last_update_state = t.state;
        t.observations.push_back({frame, d.box});
        if (d.embedding) {
            if (!t.embedding) {
                t.embedding = d.embedding;
            } else {
                const double beta = config_.embedding_ema_beta;
                std::vector<double> mixed(t.embedding->dim());
                for (std::size_t q = 0; q < mixed.size(); ++q) {
                    mixed[q] = beta * t.embedding->values()[q] + (1.0 - beta) * d.embedding->values()[q];
                }
                // Antipodal blends can cancel; keep the detection's appearance then.
                try {
                    t.embedding = Embedding(std::move(mixed));
                } catch (const InputError&) {
                    t.embedding = d.embedding;
                }
            }
        }
        t.confidence = d.confidence;
        ++t.hits;
        t.age_since_update = 0;
        if (t.status == TrackStatus::Lost) {
            t.status = TrackStatus::Confirmed;
        } else if (t.status == TrackStatus::Tentative &&
                   (t.hits >= config_.min_hits || frame_count_ <= config_.min_hits)) {
            t.status = TrackStatus::Confirmed;
        }
        updated[i] = 1;
        result.assignments.emplace_back(t.id, k);
    }

    std::vector<Track> survivors;
    survivors.reserve(tracks_.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        if (!keep[i]) continue;
        if (updated[i] && tracks_[i].status == TrackStatus::Confirmed) {
            const auto& t = tracks_[i];
            result.rows.push_back({frame, t.id, t.state.box(), t.confidence});
        }
        survivors.push_back(std::move(tracks_[i]));
    }
    tracks_ = std::move(survivors);

    for (std::size_t j = 0; j < kept.size(); ++j) {
        if (det_used[j]) continue;
        spawn(frame, detections[kept[j]]);
        if (tracks_.back().status == TrackStatus::Confirmed) {
            const auto& t = tracks_.back();
            result.rows.push_back({frame, t.id, t.state.box(), t.confidence});
        }
    }

    std::sort(result.rows.begin(), result.rows.end(),
              [](const TrackRow& a, const TrackRow& b) { return a.id < b.id; });
    return result;
}

SequenceResult run_sequence(std::span<const Detection> detections, const TrackerConfig& config,
                            int last_frame) {
    std::map<int, std::vector<Detection>> by_frame;
    for (const auto& d : detections) {
        if (d.frame < 1) {
            throw SequenceError("run_sequence: frame index " + std::to_string(d.frame) + " < 1");
        }
        by_frame[d.frame].push_back(d);
    }
    if (!by_frame.empty()) {
        last_frame = std::max(last_frame, by_frame.rbegin()->first);
    }

    Tracker tracker(config);
    SequenceResult out;
    static const std::vector<Detection> none;
    for (int f = 1; f <= last_frame; ++f) {
        auto it = by_frame.find(f);
        const auto& dets = it == by_frame.end() ? none : it->second;
        auto step = tracker.step(f, dets);
        out.rows.insert(out.rows.end(), step.rows.begin(), step.rows.end());
    }
    out.frames = last_frame;
    out.tracks_created = tracker.tracks_created();
    out.appearance_fallback_frames = tracker.appearance_fallback_frames();
    return out;
}

}  // namespace kamsort
