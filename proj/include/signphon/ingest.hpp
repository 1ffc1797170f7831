#pragma once

// Readers and writers for the dictionary catalog (XML), per-frame pose
// keypoint files (JSON) and the plain-text annotation format.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "signphon/error.hpp"
#include "signphon/pose_model.hpp"

namespace signphon {

// ---------------------------------------------------------------------------
// Catalog

// Phonological parameters of one sequence, kept as the catalog's raw strings.
struct PhonologySeq {
  int seq_no = 1;
  std::string sign_type;
  std::string handshape1;
  std::string handshape_final;
  std::string orientation_fingers;
  std::string orientation_palm;
  std::string location;
  std::string movement;
  std::string relation;
  std::string repeat;

  friend bool operator==(const PhonologySeq&, const PhonologySeq&) = default;
};

struct CatalogEntry {
  int entry_no = 0;
  std::string gloss;
  std::string sign_video;
  std::vector<PhonologySeq> sequences;

  // Video identifier, i.e. the sign_video file name without directory and extension.
  std::string video_id() const { return std::filesystem::path(sign_video).stem().string(); }

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

struct CatalogEntryError {
  std::size_t position = 0;  // 0-based index of the <Entry> element in the document
  std::string message;
};

struct Catalog {
  std::vector<CatalogEntry> entries;
  std::vector<CatalogEntryError> errors;
};

namespace detail {

inline std::string trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string child_text(const boost::property_tree::ptree& node, const char* name) {
  if (auto c = node.get_child_optional(name)) return trimmed(c->data());
  return {};
}

inline PhonologySeq parse_seq(const boost::property_tree::ptree& node) {
  PhonologySeq seq;
  const auto no = child_text(node, "SeqNo");
  if (!no.empty()) {
    auto v = to_integer(no);
    if (!v || *v < 1) throw ParseError("SeqNo '" + no + "' is not a positive integer");
    seq.seq_no = static_cast<int>(*v);
  }
  seq.sign_type = child_text(node, "SignType");
  seq.handshape1 = child_text(node, "Handshape1");
  seq.handshape_final = child_text(node, "HandshapeFinal");
  seq.orientation_fingers = child_text(node, "OrientationFingers");
  seq.orientation_palm = child_text(node, "OrientationPalm");
  seq.location = child_text(node, "Location");
  seq.movement = child_text(node, "Movement");
  seq.relation = child_text(node, "Relation");
  seq.repeat = child_text(node, "Repeat");
  return seq;
}

inline CatalogEntry parse_entry(const boost::property_tree::ptree& node) {
  CatalogEntry e;
  const auto no = child_text(node, "EntryNo");
  if (no.empty()) throw ParseError("missing EntryNo");
  auto v = to_integer(no);
  if (!v) throw ParseError("EntryNo '" + no + "' is not an integer");
  e.entry_no = static_cast<int>(*v);
  e.gloss = child_text(node, "Gloss");
  e.sign_video = child_text(node, "SignVideo");
  if (e.sign_video.empty()) throw ParseError("entry " + no + ": missing SignVideo");
  if (auto phon = node.get_child_optional("Phonology")) {
    for (const auto& [name, child] : *phon)
      if (name == "Seq") e.sequences.push_back(parse_seq(child));
  }
  if (e.sequences.empty()) throw ParseError("entry " + no + ": no Phonology/Seq elements");
  return e;
}

}  // namespace detail

// Parses a catalog document. The root may be a single <Entry> or any element
// whose children include <Entry> elements. Entries with missing mandatory
// fields are reported in Catalog::errors; the remaining entries are returned.
inline Catalog parse_catalog(std::string_view xml_text) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  std::istringstream in{std::string(xml_text)};
  try {
    pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("catalog XML line " + std::to_string(e.line()) + ": " + e.message());
  }

  Catalog out;
  std::size_t position = 0;
  std::map<int, std::size_t> seen;
  auto visit_entry = [&](const pt::ptree& node) {
    const std::size_t pos = position++;
    try {
      auto entry = detail::parse_entry(node);
      if (seen.count(entry.entry_no)) {
        out.errors.push_back({pos, "duplicate EntryNo " + std::to_string(entry.entry_no)});
        return;
      }
      seen[entry.entry_no] = pos;
      out.entries.push_back(std::move(entry));
    } catch (const ParseError& e) {
      out.errors.push_back({pos, e.what()});
    }
  };

  for (const auto& [name, node] : doc) {
    if (name == "Entry") {
      visit_entry(node);
    } else if (name != "<xmlcomment>" && name != "<xmlattr>") {
      for (const auto& [child_name, child] : node)
        if (child_name == "Entry") visit_entry(child);
    }
  }
  return out;
}

inline std::vector<CatalogEntry> filter_single_sequence(const std::vector<CatalogEntry>& entries) {
  std::vector<CatalogEntry> out;
  for (const auto& e : entries)
    if (e.sequences.size() == 1) out.push_back(e);
  return out;
}

// Lookup table from catalog (Danish) strings to label enums. The table is a
// tab-separated text file with rows `field<TAB>catalog text<TAB>label code`
// where field is one of handshape, location. Lines starting with '#' are
// comments.
class CatalogLabelMap {
 public:
  static CatalogLabelMap parse(std::string_view tsv) {
    CatalogLabelMap map;
    std::istringstream in{std::string(tsv)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (detail::trimmed(line).empty() || line.front() == '#') continue;
      std::vector<std::string> cols;
      std::stringstream ls(line);
      std::string col;
      while (std::getline(ls, col, '\t')) cols.push_back(detail::trimmed(col));
      if (cols.size() != 3) throw ParseError("label map line " + std::to_string(line_no) + ": expected 3 tab-separated columns");
      if (cols[0] == "handshape")
        map.handshapes_[cols[1]] = signphon::parse<Handshape>(cols[2]);
      else if (cols[0] == "location")
        map.locations_[cols[1]] = signphon::parse<Location>(cols[2]);
      else
        throw ParseError("label map line " + std::to_string(line_no) + ": unknown field '" + cols[0] + "'");
    }
    return map;
  }

  // Exact match first, then the first whitespace-separated word ("paedagog-hand aben").
  std::optional<Handshape> handshape(std::string_view text) const { return lookup(handshapes_, text); }
  std::optional<Location> location(std::string_view text) const { return lookup(locations_, text); }

 private:
  template <class E>
  static std::optional<E> lookup(const std::map<std::string, E, std::less<>>& m, std::string_view text) {
    const auto t = detail::trimmed(text);
    if (auto it = m.find(t); it != m.end()) return it->second;
    const auto head = t.substr(0, t.find_first_of(" \t"));
    if (auto it = m.find(head); it != m.end()) return it->second;
    return std::nullopt;
  }

  std::map<std::string, Handshape, std::less<>> handshapes_;
  std::map<std::string, Location, std::less<>> locations_;
};

// ---------------------------------------------------------------------------
// Pose frames

struct FrameMeta {
  std::size_t frame_index = 0;
  std::string source_video;
  double frame_width = 720;
  double frame_height = 576;
};

// Splits "<videoid>_<frame>_keypoints.json" into (video id, frame index).
inline std::optional<std::pair<std::string, std::size_t>> parse_frame_filename(std::string_view name) {
  constexpr std::string_view suffix = "_keypoints.json";
  if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix) return std::nullopt;
  const auto stem = name.substr(0, name.size() - suffix.size());
  const auto sep = stem.rfind('_');
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  const auto idx = detail::to_integer(stem.substr(sep + 1));
  if (!idx || *idx < 0) return std::nullopt;
  return std::pair{std::string(stem.substr(0, sep)), static_cast<std::size_t>(*idx)};
}

inline std::string frame_filename(std::string_view video_id, std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", frame);
  return std::string(video_id) + "_" + buf + "_keypoints.json";
}

namespace detail {

template <std::size_t N>
std::array<Keypoint, N> read_triples(const nlohmann::json& person, const char* field, const char* label) {
  std::array<Keypoint, N> out{};
  if (!person.contains(field)) throw FormatError(std::string(label) + ": missing field '" + field + "'");
  const auto& arr = person.at(field);
  if (!arr.is_array() || arr.size() != 3 * N)
    throw FormatError(std::string(label) + ": expected " + std::to_string(N) + " keypoints, got " +
                      (arr.is_array() ? std::to_string(arr.size() / 3) : std::string("non-array")));
  for (std::size_t i = 0; i < N; ++i) {
    const double x = arr[3 * i].get<double>();
    const double y = arr[3 * i + 1].get<double>();
    const double c = arr[3 * i + 2].get<double>();
    out[i] = c > 0.0 ? Keypoint(x, y, c) : Keypoint::undetected();
  }
  return out;
}

}  // namespace detail

// Parses one pose-estimator output file. Keypoints are read positionally from
// the first detected person; triples with zero confidence become undetected.
// An empty hand array (hand detector disabled) yields an all-undetected hand.
inline PoseFrame parse_pose_frame(std::string_view json_text, const FrameMeta& meta) {
  if (!(meta.frame_width > 0) || !(meta.frame_height > 0)) throw FormatError("frame dimensions must be positive");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("pose JSON: ") + e.what());
  }
  if (!doc.contains("people") || !doc["people"].is_array()) throw FormatError("pose JSON: missing 'people' array");
  if (doc["people"].empty()) throw DataError("no person detected");
  const auto& person = doc["people"][0];

  PoseFrame f;
  f.frame_index = meta.frame_index;
  f.source_video = meta.source_video;
  f.frame_width = meta.frame_width;
  f.frame_height = meta.frame_height;
  try {
    f.body = detail::read_triples<body::kSize>(person, "pose_keypoints_2d", "body");
    auto hand = [&](const char* field, const char* label) {
      if (person.contains(field) && person[field].is_array() && person[field].empty()) return HandSkeleton{};
      return HandSkeleton(detail::read_triples<HandSkeleton::kSize>(person, field, label));
    };
    f.left_hand = hand("hand_left_keypoints_2d", "left hand");
    f.right_hand = hand("hand_right_keypoints_2d", "right hand");
    if (person.contains("face_keypoints_2d") && !person["face_keypoints_2d"].empty()) {
      auto face = detail::read_triples<70>(person, "face_keypoints_2d", "face");
      f.face = std::vector<Keypoint>(face.begin(), face.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pose JSON: ") + e.what());
  }
  return f;
}

// Inverse of parse_pose_frame (single person). Used for fixtures and tooling.
inline std::string write_pose_frame(const PoseFrame& f) {
  auto triples = [](auto begin, auto end) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto it = begin; it != end; ++it) {
      if (it->detected()) {
        arr.push_back(it->x());
        arr.push_back(it->y());
        arr.push_back(it->confidence());
      } else {
        arr.push_back(0.0);
        arr.push_back(0.0);
        arr.push_back(0.0);
      }
    }
    return arr;
  };
  nlohmann::json person;
  person["pose_keypoints_2d"] = triples(f.body.begin(), f.body.end());
  person["hand_left_keypoints_2d"] = triples(f.left_hand.points().begin(), f.left_hand.points().end());
  person["hand_right_keypoints_2d"] = triples(f.right_hand.points().begin(), f.right_hand.points().end());
  person["face_keypoints_2d"] = f.face ? triples(f.face->begin(), f.face->end()) : nlohmann::json::array();
  nlohmann::json doc;
  doc["version"] = 1.3;
  doc["people"] = nlohmann::json::array({person});
  return doc.dump();
}

// ---------------------------------------------------------------------------
// Annotations

struct AnnotationRecord {
  std::string video_frame;
  std::int64_t bbox_x = 0;
  std::int64_t bbox_y = 0;
  Handedness handedness = Handedness::right;
  std::optional<Handshape> handshape;  // nullopt is written as the placeholder "-"
  Orientation orientation = Orientation::n;
  Location location = Location::neutral;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// Spelling of the handshape column: the code token ("pege-hand") or the
// positional index into the Handshape enum ("6").
enum class HandshapeColumn { token, index };

inline constexpr std::string_view kAnnotationHeader = "video_frame x y handedness handshape orientation location";
inline constexpr std::string_view kHandshapePlaceholder = "-";

inline std::string video_frame_name(std::string_view video_id, std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", frame);
  return std::string(video_id) + "_" + buf + ".png";
}

inline std::string write_annotations(const std::vector<AnnotationRecord>& records,
                                     HandshapeColumn style = HandshapeColumn::token) {
  std::string out(kAnnotationHeader);
  out += '\n';
  for (const auto& r : records) {
    if (r.bbox_x < 0 || r.bbox_y < 0) throw DataError("negative bounding-box origin for " + r.video_frame);
    if (r.video_frame.empty() || r.video_frame.find_first_of(" \t\n") != std::string::npos)
      throw DataError("video_frame must be a non-empty token without whitespace");
    out += r.video_frame;
    out += ' ';
    out += std::to_string(r.bbox_x);
    out += ' ';
    out += std::to_string(r.bbox_y);
    out += ' ';
    out += render(r.handedness);
    out += ' ';
    if (!r.handshape)
      out += kHandshapePlaceholder;
    else if (style == HandshapeColumn::index)
      out += std::to_string(static_cast<int>(*r.handshape));
    else
      out += render(*r.handshape);
    out += ' ';
    out += render(r.orientation);
    out += ' ';
    out += render(r.location);
    out += '\n';
  }
  return out;
}

struct AnnotationFile {
  std::vector<AnnotationRecord> records;
  // Index when every handshape cell of the file used the numeric spelling.
  HandshapeColumn handshape_column = HandshapeColumn::token;
};

inline AnnotationFile read_annotation_file(std::string_view text) {
  AnnotationFile file;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  bool any_token = false;
  bool any_index = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> cols;
    for (std::string c; ls >> c;) cols.push_back(std::move(c));
    if (cols.empty()) continue;
    auto fail = [&](const std::string& msg) { throw ParseError("row " + std::to_string(row) + ": " + msg); };
    if (!header_seen) {
      std::ostringstream joined;
      for (std::size_t i = 0; i < cols.size(); ++i) joined << (i ? " " : "") << cols[i];
      if (joined.str() != kAnnotationHeader) fail("expected header '" + std::string(kAnnotationHeader) + "'");
      header_seen = true;
      continue;
    }
    if (cols.size() != 7) fail("expected 7 columns, got " + std::to_string(cols.size()));
    AnnotationRecord r;
    r.video_frame = cols[0];
    const auto x = detail::to_integer(cols[1]);
    const auto y = detail::to_integer(cols[2]);
    if (!x || !y || *x < 0 || *y < 0) fail("bounding-box origin must be non-negative integers");
    r.bbox_x = *x;
    r.bbox_y = *y;
    auto label = [&]<class E>(const std::string& tok, E*) {
      auto v = try_parse<E>(tok);
      if (!v) fail("unknown " + std::string(LabelTraits<E>::kind) + " label '" + tok + "'");
      return *v;
    };
    r.handedness = label(cols[3], static_cast<Handedness*>(nullptr));
    if (cols[4] != kHandshapePlaceholder) {
      if (auto idx = detail::to_integer(cols[4])) {
        if (*idx < 0 || *idx >= static_cast<long long>(label_count<Handshape>()))
          fail("handshape index " + cols[4] + " out of range");
        r.handshape = static_cast<Handshape>(*idx);
        any_index = true;
      } else {
        r.handshape = label(cols[4], static_cast<Handshape*>(nullptr));
        any_token = true;
      }
    }
    r.orientation = label(cols[5], static_cast<Orientation*>(nullptr));
    r.location = label(cols[6], static_cast<Location*>(nullptr));
    file.records.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("row 1: missing header");
  if (any_index && !any_token) file.handshape_column = HandshapeColumn::index;
  return file;
}

inline std::vector<AnnotationRecord> read_annotations(std::string_view text) {
  return read_annotation_file(text).records;
}

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes via a temporary sibling file and an atomic rename.
inline void write_text_file_atomic(const std::filesystem::path& p, std::string_view content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace signphon
