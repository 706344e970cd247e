#pragma once

#include <kamsort/geometry.hpp>
#include <kamsort/tracker.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace kamsort::io {

/// One MOT-format line: frame,id,x,y,w,h,conf,-1,-1,-1.
struct MotRow {
    int frame = 1;
    int id = -1;
    BBox box;
    double conf = 1.0;

    friend bool operator==(const MotRow&, const MotRow&) = default;
};

using MotTable = std::vector<MotRow>;

/// Coordinates written with this many decimals by default.
inline constexpr int kDefaultPrecision = 2;
/// Pass as precision for shortest round-trip formatting.
inline constexpr int kLossless = -1;

/// Strict on the field count (exactly 10), lenient on number formatting.
/// Blank lines are skipped. `source` names the input in error messages.
MotTable parse_mot(std::string_view text, const std::string& source = "<memory>");
MotTable read_mot(const std::string& path);

/// Rows sorted by (frame, id), stable for equal keys.
std::string format_mot(MotTable table, int precision = kDefaultPrecision);
void write_mot(const MotTable& table, const std::string& path, int precision = kDefaultPrecision);

std::vector<Detection> to_detections(const MotTable& rows);
MotTable from_track_rows(const std::vector<TrackRow>& rows);

struct EmbeddingRow {
    int frame = 1;
    int det_index = 0;
    std::vector<double> values;
};

/**
 * Attach embeddings from `frame,det_index,e0,...` CSV text to `dets`.
 *
 * det_index counts the detections of a frame in their order within `dets`.
 * A frame absent from the file keeps absent embeddings; a frame that is
 * present must cover every one of its detections. Values are renormalised.
 * Returns the embedding dimension (0 for an empty file).
 */
std::size_t parse_embeddings(std::string_view text, std::vector<Detection>& dets,
                             const std::string& source = "<memory>");
std::size_t read_embeddings(const std::string& path, std::vector<Detection>& dets);

std::string format_embeddings(const std::vector<EmbeddingRow>& rows);
void write_embeddings(const std::vector<EmbeddingRow>& rows, const std::string& path);

struct Video {
    int id = 0;
    std::string video_path;
    friend bool operator==(const Video&, const Video&) = default;
};

enum class QueryType { Superset, Subset };

struct TrackingQuery {
    int id = 0;
    int video_id = 0;
    bool is_eval = false;
    QueryType type = QueryType::Superset;
    int superset_idx = -1;
    std::string class_name;
    std::vector<std::string> synonyms;
    std::string definition;
    std::vector<std::string> attributes;
    std::string track_path;
    std::string caption;
    friend bool operator==(const TrackingQuery&, const TrackingQuery&) = default;
};

struct Annotations {
    std::vector<Video> videos;
    std::vector<TrackingQuery> queries;
    friend bool operator==(const Annotations&, const Annotations&) = default;
};

/// Accepts top-level "videos"/"tracking_queries" (or the singular "video"/
/// "tracking_query"). Unknown keys are ignored; missing keys are errors that
/// name the offending query id.
Annotations parse_annotations(std::string_view json_text, const std::string& source = "<memory>");
Annotations read_annotations(const std::string& path);
std::string format_annotations(const Annotations& ann);

/// Whole-file read; throws InputError when the file cannot be opened.
std::string read_file(const std::string& path);
/// Writes via a temporary file and rename so readers never see partial output.
void write_file(const std::string& path, std::string_view contents);

}  // namespace kamsort::io
