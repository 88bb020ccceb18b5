#include "pedcloud/model_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "json_codec.hpp"
#include "pedcloud/errors.hpp"

namespace pedcloud {

namespace fs = std::filesystem;
using detail::json;

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

double parse_coordinate(std::string_view token, std::size_t line_no) {
    std::string_view t = token;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ParseError("PLY line " + std::to_string(line_no) + ": non-numeric value '" +
                         std::string(token) + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError("PLY line " + std::to_string(line_no) + ": non-finite coordinate");
    }
    return value;
}

std::size_t parse_count(std::string_view token, const std::string& what) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError("bad " + what + " '" + std::string(token) + "'");
    }
    return value;
}

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
    bool has_list = false;
};

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw IoError("cannot format number");
    return std::string(buf, ptr);
}

PointCloud parse_point_cloud(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "ply") throw ParseError("missing 'ply' magic line");

    PointCloud cloud;
    std::vector<PlyElement> elements;
    bool saw_format = false;
    std::size_t i = 1;
    bool header_done = false;
    for (; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "end_header") {
            header_done = true;
            ++i;
            break;
        }
        if (tok[0] == "format") {
            if (tok.size() < 2) throw ParseError("malformed format line");
            if (tok[1] != "ascii") throw ParseError("binary PLY is not supported; convert to ascii");
            saw_format = true;
        } else if (tok[0] == "comment") {
            if (tok.size() >= 2 && (tok[1] == "frame_id" || tok[1] == "scene_id")) {
                auto rest = trim(line.substr(line.find(tok[1]) + tok[1].size()));
                (tok[1] == "frame_id" ? cloud.frame_id : cloud.scene_id) = std::string(rest);
            }
        } else if (tok[0] == "obj_info") {
            continue;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("malformed element line");
            elements.push_back({std::string(tok[1]), parse_count(tok[2], "element count"), {}, false});
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError("property before any element");
            if (tok.size() >= 2 && tok[1] == "list") {
                if (tok.size() != 5) throw ParseError("malformed list property");
                elements.back().has_list = true;
                elements.back().properties.emplace_back(tok[4]);
            } else {
                if (tok.size() != 3) throw ParseError("malformed property line");
                elements.back().properties.emplace_back(tok[2]);
            }
        } else {
            throw ParseError("unexpected header line '" + std::string(line) + "'");
        }
    }
    if (!header_done) throw ParseError("PLY header has no end_header");
    if (!saw_format) throw ParseError("PLY header has no format line");

    const PlyElement* vertex = nullptr;
    for (const auto& e : elements) {
        if (e.name == "vertex") vertex = &e;
    }
    if (vertex == nullptr) throw ParseError("PLY has no vertex element");

    std::array<std::size_t, 3> xyz{};
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const char* name = axis == 0 ? "x" : axis == 1 ? "y" : "z";
        auto it = std::find(vertex->properties.begin(), vertex->properties.end(), name);
        if (it == vertex->properties.end()) {
            throw ParseError(std::string("vertex element lacks property ") + name);
        }
        xyz[axis] = static_cast<std::size_t>(it - vertex->properties.begin());
    }
    if (vertex->has_list) throw ParseError("list properties on vertex are not supported");

    cloud.points.reserve(vertex->count);
    for (const auto& e : elements) {
        for (std::size_t n = 0; n < e.count; ++n, ++i) {
            if (i >= lines.size()) {
                throw ParseError("PLY body ends early: element '" + e.name + "' declares " +
                                 std::to_string(e.count) + " rows");
            }
            if (&e != vertex) continue;
            const auto tok = split_ws(lines[i]);
            if (tok.size() != e.properties.size()) {
                throw ParseError("PLY line " + std::to_string(i + 1) + ": expected " +
                                 std::to_string(e.properties.size()) + " values");
            }
            cloud.points.push_back({parse_coordinate(tok[xyz[0]], i + 1),
                                    parse_coordinate(tok[xyz[1]], i + 1),
                                    parse_coordinate(tok[xyz[2]], i + 1)});
        }
    }
    for (; i < lines.size(); ++i) {
        if (!trim(lines[i]).empty()) {
            throw ParseError("PLY body has more rows than declared (line " + std::to_string(i + 1) + ")");
        }
    }
    return cloud;
}

std::string write_point_cloud(const PointCloud& cloud) {
    std::string out;
    out.reserve(64 + cloud.points.size() * 40);
    out += "ply\nformat ascii 1.0\n";
    if (!cloud.frame_id.empty()) out += "comment frame_id " + cloud.frame_id + "\n";
    if (!cloud.scene_id.empty()) out += "comment scene_id " + cloud.scene_id + "\n";
    out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : cloud.points) {
        out += format_double(p.x);
        out += ' ';
        out += format_double(p.y);
        out += ' ';
        out += format_double(p.z);
        out += '\n';
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

PointCloud load_point_cloud(const fs::path& path) { return parse_point_cloud(read_file(path)); }

void save_point_cloud(const PointCloud& cloud, const fs::path& path) {
    write_file_atomic(path, write_point_cloud(cloud));
}

// --- JSON helpers ---------------------------------------------------------

namespace detail {

double require_number(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw ParseError(std::string("missing or non-numeric field '") + key + "'");
    }
    return it->get<double>();
}

std::string require_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ParseError(std::string("missing or non-string field '") + key + "'");
    }
    return it->get<std::string>();
}

json box_to_json(const Box2D& box) {
    json j{{"class", box.label},
           {"x_min", box.x_min},
           {"y_min", box.y_min},
           {"x_max", box.x_max},
           {"y_max", box.y_max}};
    if (box.score) j["score"] = *box.score;
    return j;
}

Box2D box_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("box must be a JSON object");
    Box2D box;
    box.label = require_string(j, "class");
    box.x_min = require_number(j, "x_min");
    box.y_min = require_number(j, "y_min");
    box.x_max = require_number(j, "x_max");
    box.y_max = require_number(j, "y_max");
    if (auto it = j.find("score"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw ParseError("score must be a number");
        box.score = it->get<double>();
    }
    if (auto why = box_violation(box); !why.empty()) throw ParseError("invalid box: " + why);
    return box;
}

json entry_to_json(const ManifestEntry& e) {
    json j{{"cluster_id", e.cluster_id},
           {"path", e.path},
           {"label", to_string(e.label)},
           {"source_box", box_to_json(e.source_box)},
           {"scene_id", e.scene_id},
           {"frame_id", e.frame_id},
           {"source", to_string(e.source)},
           {"review", to_string(e.review)},
           {"split", to_string(e.split)},
           {"point_count", e.point_count}};
    if (!e.image_path.empty()) j["image_path"] = e.image_path;
    if (!e.reviewer.empty()) j["reviewer"] = e.reviewer;
    if (e.reviewed_at != 0) j["reviewed_at"] = e.reviewed_at;
    return j;
}

template <typename T, typename Parse>
T require_enum(const json& j, const char* key, Parse parse) {
    const auto s = require_string(j, key);
    auto v = parse(s);
    if (!v) throw ParseError(std::string("bad value '") + s + "' for field '" + key + "'");
    return *v;
}

ManifestEntry entry_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("manifest entry must be an object");
    ManifestEntry e;
    e.cluster_id = require_string(j, "cluster_id");
    if (e.cluster_id.empty()) throw ParseError("empty cluster_id");
    e.path = require_string(j, "path");
    e.label = require_enum<ClusterLabel>(j, "label", parse_cluster_label);
    if (!j.contains("source_box")) throw ParseError("entry lacks source_box");
    e.source_box = box_from_json(j.at("source_box"));
    e.scene_id = require_string(j, "scene_id");
    e.frame_id = require_string(j, "frame_id");
    e.source = require_enum<ClusterSource>(j, "source", parse_cluster_source);
    e.review = require_enum<ReviewStatus>(j, "review", parse_review_status);
    e.split = require_enum<Split>(j, "split", parse_split);
    auto pc = j.find("point_count");
    if (pc == j.end() || !pc->is_number_unsigned()) throw ParseError("bad point_count");
    e.point_count = pc->get<std::size_t>();
    if (auto it = j.find("image_path"); it != j.end()) e.image_path = it->get<std::string>();
    if (auto it = j.find("reviewer"); it != j.end()) e.reviewer = it->get<std::string>();
    if (auto it = j.find("reviewed_at"); it != j.end()) e.reviewed_at = it->get<std::int64_t>();
    return e;
}

json points_to_json(const std::vector<Point3>& points) {
    json arr = json::array();
    for (const auto& p : points) arr.push_back(json::array({p.x, p.y, p.z}));
    return arr;
}

}  // namespace detail

// --- detections -------------------------------------------------------------

DetectionMap parse_detections(std::string_view text) {
    DetectionMap out;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("detections line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!j.is_object()) throw ParseError("expected a JSON object");
            auto& boxes = out[detail::require_string(j, "frame_id")];
            auto it = j.find("boxes");
            if (it == j.end() || !it->is_array()) throw ParseError("missing 'boxes' array");
            for (const auto& b : *it) boxes.push_back(detail::box_from_json(b));
        } catch (const ParseError& e) {
            throw ParseError("detections line " + std::to_string(line_no) + ": " + e.what());
        } catch (const json::exception& e) {
            throw ParseError("detections line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string write_detections(const DetectionMap& detections) {
    std::string out;
    for (const auto& [frame, boxes] : detections) {
        json j{{"frame_id", frame}, {"boxes", json::array()}};
        for (const auto& b : boxes) j["boxes"].push_back(detail::box_to_json(b));
        out += j.dump();
        out += '\n';
    }
    return out;
}

DetectionMap load_detections(const fs::path& path) { return parse_detections(read_file(path)); }

void save_detections(const DetectionMap& detections, const fs::path& path) {
    write_file_atomic(path, write_detections(detections));
}

// --- calibration -----------------------------------------------------------

CameraProjection parse_calibration(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("calibration: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("calibration must be a JSON object");
    auto it = j.find("p");
    if (it == j.end() || !it->is_array()) throw ParseError("calibration lacks 'p' array");
    if (it->size() != 12) {
        throw ParseError("calibration 'p' must have 12 entries, got " + std::to_string(it->size()));
    }
    CameraProjection cam;
    for (std::size_t k = 0; k < 12; ++k) {
        if (!(*it)[k].is_number()) throw ParseError("calibration 'p' has a non-numeric entry");
        cam.p[k] = (*it)[k].get<double>();
    }
    auto dim = [&](const char* key, int fallback) {
        auto d = j.find(key);
        if (d == j.end()) return fallback;
        if (!d->is_number_integer()) throw ParseError(std::string(key) + " must be an integer");
        return d->get<int>();
    };
    cam.image_width = dim("image_width", 1224);
    cam.image_height = dim("image_height", 1024);
    if (auto why = camera_violation(cam); !why.empty()) throw ParseError("calibration: " + why);
    return cam;
}

std::string write_calibration(const CameraProjection& camera) {
    json j{{"p", camera.p}, {"image_width", camera.image_width}, {"image_height", camera.image_height}};
    return j.dump(2) + "\n";
}

CameraProjection load_calibration(const fs::path& path) { return parse_calibration(read_file(path)); }

// --- manifest --------------------------------------------------------------

ClusterManifest parse_manifest(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("manifest must be a JSON object");
    auto v = j.find("schema_version");
    if (v == j.end() || !v->is_number_integer()) throw ParseError("manifest lacks schema_version");
    ClusterManifest m;
    m.schema_version = v->get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
        throw VersionError("unsupported manifest schema_version " + std::to_string(m.schema_version));
    }
    auto entries = j.find("entries");
    if (entries == j.end() || !entries->is_array()) throw ParseError("manifest lacks 'entries' array");
    std::set<std::string, std::less<>> seen;
    m.entries.reserve(entries->size());
    try {
        for (const auto& e : *entries) {
            auto entry = detail::entry_from_json(e);
            if (!seen.insert(entry.cluster_id).second) {
                throw ParseError("duplicate cluster_id '" + entry.cluster_id + "'");
            }
            m.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    return m;
}

std::string write_manifest(const ClusterManifest& manifest) {
    json j{{"schema_version", manifest.schema_version}, {"entries", json::array()}};
    auto& arr = j["entries"];
    for (const auto& e : manifest.entries) arr.push_back(detail::entry_to_json(e));
    return j.dump(1) + "\n";
}

ClusterManifest load_manifest(const fs::path& path) { return parse_manifest(read_file(path)); }

fs::path resolve_entry_path(const fs::path& manifest_path, const ManifestEntry& entry) {
    fs::path p(entry.path);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

void save_manifest(const ClusterManifest& manifest, const fs::path& path) {
    if (manifest.schema_version != kManifestSchemaVersion) {
        throw VersionError("cannot write schema_version " + std::to_string(manifest.schema_version));
    }
    std::set<std::string_view> seen;
    for (const auto& e : manifest.entries) {
        if (!seen.insert(e.cluster_id).second) throw ParseError("duplicate cluster_id '" + e.cluster_id + "'");
        if (!fs::exists(resolve_entry_path(path, e))) {
            throw IoError("cluster file missing for '" + e.cluster_id + "': " + e.path);
        }
    }
    write_file_atomic(path, write_manifest(manifest));
}

}  // namespace pedcloud
