#include <kamsort/io.hpp>

#include <kamsort/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace kamsort::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, const std::string& source, std::size_t line, const char* name) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw FormatError(source, line, std::string("invalid number for ") + name + ": '" + std::string(field) + "'");
    }
    return v;
}

int parse_int(std::string_view field, const std::string& source, std::size_t line, const char* name) {
    const double v = parse_double(field, source, line, name);
    if (v != std::floor(v) || v < INT_MIN || v > INT_MAX) {
        throw FormatError(source, line, std::string("expected an integer for ") + name + ": '" + std::string(field) + "'");
    }
    return static_cast<int>(v);
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        const auto end = pos == std::string_view::npos ? text.size() : pos;
        ++lineno;
        const auto line = trim(text.substr(start, end - start));
        if (!line.empty()) fn(line, lineno);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
}

std::string format_number(double v, int precision) {
    char buf[64];
    if (precision < 0) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        (void)ec;
        return std::string(buf, ptr);
    }
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot write '" + path + "'");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw InputError("write failed for '" + path + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot write '" + path + "'");
    }
}

MotTable parse_mot(std::string_view text, const std::string& source) {
    MotTable rows;
    for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto f = split_commas(line);
        if (f.size() != 10) {
            throw FormatError(source, lineno, "expected 10 comma-separated fields, found " + std::to_string(f.size()));
        }
        MotRow r;
        r.frame = parse_int(f[0], source, lineno, "frame");
        if (r.frame < 1) {
            throw FormatError(source, lineno, "frame index must be >= 1");
        }
        r.id = parse_int(f[1], source, lineno, "id");
        r.box = {parse_double(f[2], source, lineno, "x"), parse_double(f[3], source, lineno, "y"),
                 parse_double(f[4], source, lineno, "width"), parse_double(f[5], source, lineno, "height")};
        if (!r.box.valid()) {
            throw FormatError(source, lineno, "box width and height must be positive");
        }
        r.conf = parse_double(f[6], source, lineno, "confidence");
        for (std::size_t k = 7; k < 10; ++k) {
            parse_double(f[k], source, lineno, "trailing field");
        }
        rows.push_back(r);
    });
    return rows;
}

MotTable read_mot(const std::string& path) { return parse_mot(read_file(path), path); }

std::string format_mot(MotTable table, int precision) {
    std::stable_sort(table.begin(), table.end(), [](const MotRow& a, const MotRow& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    std::string out;
    out.reserve(table.size() * 48);
    for (const auto& r : table) {
        out += std::to_string(r.frame);
        out += ',';
        out += std::to_string(r.id);
        for (double v : {r.box.x, r.box.y, r.box.w, r.box.h, r.conf}) {
            out += ',';
            out += format_number(v, precision);
        }
        out += ",-1,-1,-1\n";
    }
    return out;
}

void write_mot(const MotTable& table, const std::string& path, int precision) {
    write_file(path, format_mot(table, precision));
}

std::vector<Detection> to_detections(const MotTable& rows) {
    std::vector<Detection> dets;
    dets.reserve(rows.size());
    for (const auto& r : rows) {
        dets.push_back({r.frame, r.box, r.conf, std::nullopt});
    }
    return dets;
}

MotTable from_track_rows(const std::vector<TrackRow>& rows) {
    MotTable out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back({r.frame, r.id, r.box, r.confidence});
    }
    return out;
}

std::size_t parse_embeddings(std::string_view text, std::vector<Detection>& dets, const std::string& source) {
    // Detection indices of each frame, in order.
    std::map<int, std::vector<std::size_t>> frames;
    for (std::size_t k = 0; k < dets.size(); ++k) {
        frames[dets[k].frame].push_back(k);
    }
    std::map<int, std::vector<std::optional<Embedding>>> parsed;
    std::map<int, std::size_t> first_line;
    std::size_t dim = 0;

    for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto f = split_commas(line);
        if (f.size() < 3) {
            throw FormatError(source, lineno, "expected frame,det_index and at least one value");
        }
        const int frame = parse_int(f[0], source, lineno, "frame");
        const int index = parse_int(f[1], source, lineno, "det_index");
        const std::size_t d = f.size() - 2;
        if (dim == 0) {
            dim = d;
        } else if (d != dim) {
            throw FormatError(source, lineno, "embedding dimension " + std::to_string(d) +
                                                  " differs from " + std::to_string(dim));
        }
        const auto it = frames.find(frame);
        if (it == frames.end()) {
            throw FormatError(source, lineno, "frame " + std::to_string(frame) + " has no detections");
        }
        if (index < 0 || static_cast<std::size_t>(index) >= it->second.size()) {
            throw FormatError(source, lineno, "det_index " + std::to_string(index) + " out of range for frame " +
                                                  std::to_string(frame));
        }
        auto& slots = parsed[frame];
        if (slots.empty()) {
            slots.resize(it->second.size());
            first_line[frame] = lineno;
        }
        auto& slot = slots[static_cast<std::size_t>(index)];
        if (slot) {
            throw FormatError(source, lineno, "duplicate row for frame " + std::to_string(frame) + " det_index " +
                                                  std::to_string(index));
        }
        std::vector<double> values;
        values.reserve(d);
        for (std::size_t q = 2; q < f.size(); ++q) {
            values.push_back(parse_double(f[q], source, lineno, "embedding value"));
        }
        try {
            slot.emplace(std::move(values));
        } catch (const InputError& e) {
            throw FormatError(source, lineno, e.what());
        }
    });

    for (auto& [frame, slots] : parsed) {
        const auto& indices = frames.at(frame);
        for (std::size_t q = 0; q < slots.size(); ++q) {
            if (!slots[q]) {
                throw FormatError(source, first_line[frame], "frame " + std::to_string(frame) +
                                                                 " is missing det_index " + std::to_string(q));
            }
        }
        for (std::size_t q = 0; q < slots.size(); ++q) {
            dets[indices[q]].embedding = std::move(slots[q]);
        }
    }
    return dim;
}

std::size_t read_embeddings(const std::string& path, std::vector<Detection>& dets) {
    return parse_embeddings(read_file(path), dets, path);
}

std::string format_embeddings(const std::vector<EmbeddingRow>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += std::to_string(r.frame);
        out += ',';
        out += std::to_string(r.det_index);
        for (double v : r.values) {
            out += ',';
            out += format_number(v, kLossless);
        }
        out += '\n';
    }
    return out;
}

void write_embeddings(const std::vector<EmbeddingRow>& rows, const std::string& path) {
    write_file(path, format_embeddings(rows));
}

namespace {

using nlohmann::json;

const json& require_key(const json& obj, const char* key, const std::string& source, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(source, 0, where + ": missing key '" + key + "'");
    }
    return *it;
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& source, const std::string& where) {
    const json& v = require_key(obj, key, source, where);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw FormatError(source, 0, where + ": key '" + key + "' has the wrong type");
    }
}

const json* find_either(const json& root, const char* a, const char* b) {
    if (auto it = root.find(a); it != root.end()) return &*it;
    if (auto it = root.find(b); it != root.end()) return &*it;
    return nullptr;
}

}  // namespace

Annotations parse_annotations(std::string_view json_text, const std::string& source) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(source, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw FormatError(source, 0, "top level must be an object");
    }
    Annotations ann;
    const json* videos = find_either(root, "videos", "video");
    const json* queries = find_either(root, "tracking_queries", "tracking_query");
    if (!videos || !videos->is_array()) {
        throw FormatError(source, 0, "missing 'videos' array");
    }
    if (!queries || !queries->is_array()) {
        throw FormatError(source, 0, "missing 'tracking_queries' array");
    }
    std::size_t n = 0;
    for (const auto& v : *videos) {
        const std::string where = "video #" + std::to_string(n++);
        if (!v.is_object()) throw FormatError(source, 0, where + ": not an object");
        ann.videos.push_back({get_as<int>(v, "id", source, where), get_as<std::string>(v, "video_path", source, where)});
    }
    n = 0;
    for (const auto& q : *queries) {
        std::string where = "tracking query #" + std::to_string(n++);
        if (!q.is_object()) throw FormatError(source, 0, where + ": not an object");
        TrackingQuery t;
        t.id = get_as<int>(q, "id", source, where);
        where = "tracking query id " + std::to_string(t.id);
        t.video_id = get_as<int>(q, "video_id", source, where);
        t.is_eval = get_as<bool>(q, "is_eval", source, where);
        const auto type = get_as<std::string>(q, "type", source, where);
        if (type == "superset") {
            t.type = QueryType::Superset;
        } else if (type == "subset") {
            t.type = QueryType::Subset;
        } else {
            throw FormatError(source, 0, where + ": type must be \"superset\" or \"subset\"");
        }
        t.superset_idx = get_as<int>(q, "superset_idx", source, where);
        if (t.type == QueryType::Superset && t.superset_idx != -1) {
            throw FormatError(source, 0, where + ": superset queries need superset_idx -1");
        }
        if (t.type == QueryType::Subset && t.superset_idx < 0) {
            throw FormatError(source, 0, where + ": subset queries need superset_idx >= 0");
        }
        t.class_name = get_as<std::string>(q, "class_name", source, where);
        t.synonyms = get_as<std::vector<std::string>>(q, "synonyms", source, where);
        t.definition = get_as<std::string>(q, "definition", source, where);
        t.attributes = get_as<std::vector<std::string>>(q, "attributes", source, where);
        t.track_path = get_as<std::string>(q, "track_path", source, where);
        t.caption = get_as<std::string>(q, "caption", source, where);
        ann.queries.push_back(std::move(t));
    }
    return ann;
}

Annotations read_annotations(const std::string& path) { return parse_annotations(read_file(path), path); }

std::string format_annotations(const Annotations& ann) {
    json root = json::object();
    root["videos"] = json::array();
    for (const auto& v : ann.videos) {
        root["videos"].push_back({{"id", v.id}, {"video_path", v.video_path}});
    }
    root["tracking_queries"] = json::array();
    for (const auto& q : ann.queries) {
        root["tracking_queries"].push_back({
            {"id", q.id},
            {"video_id", q.video_id},
            {"is_eval", q.is_eval},
            {"type", q.type == QueryType::Superset ? "superset" : "subset"},
            {"superset_idx", q.superset_idx},
            {"class_name", q.class_name},
            {"synonyms", q.synonyms},
            {"definition", q.definition},
            {"attributes", q.attributes},
            {"track_path", q.track_path},
            {"caption", q.caption},
        });
    }
    return root.dump(2) + "\n";
}

}  // namespace kamsort::io
