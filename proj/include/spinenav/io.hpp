#pragma once

// Capture-session files, calibration artifacts and plain exports.
//
// A capture session is JSON lines: a header object on the first line, then
// one record per line. The header's digest is the SHA-256 of the record
// lines (each terminated by '\n'). All JSON is written in canonical form
// (sorted keys, no whitespace, shortest round-trip doubles), so reading and
// re-writing a file reproduces it byte for byte.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spinenav/json.hpp"

namespace spinenav {

constexpr int kSchemaVersion = 1;
constexpr std::string_view kSolverVersion = "spinenav 0.1.0";

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

inline std::string canonical(const json& j) { return j.dump(); }

// --- files -----------------------------------------------------------------

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  return parse_json(read_file(path), path.string());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

/// Converts library-external parse failures (missing keys, wrong types) into FormatError.
template <typename F>
auto with_format_errors(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

// --- capture sessions --------------------------------------------------------

enum class SessionKind { HandEye, Pivot, Tip };

inline std::string_view to_string(SessionKind k) {
  switch (k) {
    case SessionKind::HandEye: return "handeye";
    case SessionKind::Pivot: return "pivot";
    case SessionKind::Tip: return "tip";
  }
  return "?";
}

inline SessionKind session_kind_from_string(std::string_view s) {
  if (s == "handeye") return SessionKind::HandEye;
  if (s == "pivot") return SessionKind::Pivot;
  if (s == "tip") return SessionKind::Tip;
  throw FormatError("unknown session kind '" + std::string(s) + "'");
}

using SessionRecords = std::variant<std::vector<HandEyeSample>, std::vector<PivotSample>, std::vector<TipSample>>;

struct CaptureSession {
  SessionRecords records;
  json device = json::object();
  int schema_version = kSchemaVersion;
  std::string digest = {};  // filled by serialize/parse

  SessionKind kind() const { return static_cast<SessionKind>(records.index()); }
  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, records);
  }
  template <typename T>
  const std::vector<T>& as() const {
    if (const auto* v = std::get_if<std::vector<T>>(&records)) return *v;
    throw FormatError("capture session holds " + std::string(to_string(kind())) + " records");
  }
};

inline std::string serialize_records(const SessionRecords& records) {
  std::string body;
  std::visit(
      [&](const auto& v) {
        for (const auto& r : v) body += canonical(to_json(r)) + "\n";
      },
      records);
  return body;
}

/// Canonical text form; also updates session.digest.
inline std::string serialize_session(CaptureSession& session) {
  const std::string body = serialize_records(session.records);
  session.digest = sha256_hex(body);
  const json header{{"schema_version", session.schema_version},
                    {"kind", to_string(session.kind())},
                    {"device", session.device},
                    {"record_count", session.size()},
                    {"digest", session.digest}};
  return canonical(header) + "\n" + body;
}

/// Parses a session and checks its digest and record count.
inline CaptureSession parse_session(std::string_view text, const std::string& what = "capture session") {
  return with_format_errors(what, [&] {
    const auto eol = text.find('\n');
    if (eol == std::string_view::npos) throw FormatError(what + ": missing header line");
    const json header = parse_json(text.substr(0, eol), what + " header");
    CaptureSession s;
    s.schema_version = header.at("schema_version").get<int>();
    if (s.schema_version != kSchemaVersion) {
      throw FormatError(what + ": unsupported schema_version " + std::to_string(s.schema_version));
    }
    s.device = header.at("device");
    s.digest = header.at("digest").get<std::string>();
    const SessionKind kind = session_kind_from_string(header.at("kind").get<std::string>());

    std::vector<json> rows;
    std::string_view rest = text.substr(eol + 1);
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      const std::string_view line = rest.substr(0, nl);
      if (!line.empty()) rows.push_back(parse_json(line, what + " record"));
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    }
    if (rows.size() != header.at("record_count").get<std::size_t>()) {
      throw FormatError(what + ": record_count does not match the number of records");
    }
    switch (kind) {
      case SessionKind::HandEye: {
        std::vector<HandEyeSample> v;
        for (const auto& r : rows) v.push_back(handeye_sample_from_json(r));
        s.records = std::move(v);
        break;
      }
      case SessionKind::Pivot: {
        std::vector<PivotSample> v;
        for (const auto& r : rows) v.push_back(pivot_sample_from_json(r));
        s.records = std::move(v);
        break;
      }
      case SessionKind::Tip: {
        std::vector<TipSample> v;
        for (const auto& r : rows) v.push_back(tip_sample_from_json(r));
        s.records = std::move(v);
        break;
      }
    }
    if (sha256_hex(serialize_records(s.records)) != s.digest) {
      throw FormatError(what + ": digest does not match payload");
    }
    return s;
  });
}

inline void write_session(const std::filesystem::path& path, CaptureSession& session) {
  write_file_atomic(path, serialize_session(session));
}

inline CaptureSession read_session(const std::filesystem::path& path) {
  return parse_session(read_file(path), path.string());
}

// --- calibration artifacts ---------------------------------------------------

struct SessionRef {
  std::string role;  // "handeye", "pivot", "tip_rigid", ...
  std::optional<std::string> digest;
  std::string file;
  bool external = false;  // produced outside the tool chain; no digest to resolve
};

struct Provenance {
  std::vector<SessionRef> sessions;
  std::string solver_version = std::string(kSolverVersion);
  json timestamps = json::object();

  void validate() const {
    for (const auto& s : sessions) {
      if (!s.digest && !s.external) {
        throw FormatError("session reference '" + s.role + "' has no digest and is not marked external");
      }
    }
  }
};

inline json to_json(const Provenance& p) {
  json sessions = json::array();
  for (const auto& s : p.sessions) {
    sessions.push_back(json{{"role", s.role},
                            {"digest", s.digest ? json(*s.digest) : json(nullptr)},
                            {"file", s.file},
                            {"external", s.external}});
  }
  return json{{"sessions", sessions}, {"solver_version", p.solver_version}, {"timestamps", p.timestamps}};
}

inline Provenance provenance_from_json(const json& j) {
  Provenance p;
  for (const auto& s : j.at("sessions")) {
    SessionRef r;
    r.role = s.at("role").get<std::string>();
    if (!s.at("digest").is_null()) r.digest = s.at("digest").get<std::string>();
    r.file = s.at("file").get<std::string>();
    r.external = s.at("external").get<bool>();
    p.sessions.push_back(std::move(r));
  }
  p.solver_version = j.at("solver_version").get<std::string>();
  p.timestamps = j.at("timestamps");
  p.validate();
  return p;
}

/// A solver output (or a full calibration set) plus where it came from.
struct Artifact {
  std::string kind;  // handeye_result, pivot_result, tip_result, calibration, ...
  json payload;
  Provenance provenance;
};

inline json to_json(const Artifact& a) {
  a.provenance.validate();
  return json{{"schema_version", kSchemaVersion}, {"kind", a.kind}, {"result", a.payload},
              {"provenance", to_json(a.provenance)}};
}

inline std::string serialize_artifact(const Artifact& a) { return canonical(to_json(a)) + "\n"; }

inline Artifact parse_artifact(std::string_view text, const std::string& what = "artifact") {
  return with_format_errors(what, [&] {
    const json j = parse_json(text, what);
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw FormatError(what + ": unsupported schema_version");
    return Artifact{j.at("kind").get<std::string>(), j.at("result"), provenance_from_json(j.at("provenance"))};
  });
}

inline void write_artifact(const std::filesystem::path& path, const Artifact& a) {
  write_file_atomic(path, serialize_artifact(a));
}

inline Artifact read_artifact(const std::filesystem::path& path, std::string_view expected_kind = {}) {
  Artifact a = parse_artifact(read_file(path), path.string());
  if (!expected_kind.empty() && a.kind != expected_kind) {
    throw FormatError(path.string() + ": expected a " + std::string(expected_kind) + " artifact, found " + a.kind);
  }
  return a;
}

struct CalibrationArtifact {
  CalibrationSet calibration;
  Provenance provenance;
};

inline Artifact to_artifact(const CalibrationArtifact& c) { return Artifact{"calibration", to_json(c.calibration), c.provenance}; }

inline CalibrationArtifact calibration_artifact_from(const Artifact& a) {
  if (a.kind != "calibration") throw FormatError("expected a calibration artifact, found " + a.kind);
  return with_format_errors("calibration artifact",
                            [&] { return CalibrationArtifact{calibration_set_from_json(a.payload), a.provenance}; });
}

// --- plain exports -----------------------------------------------------------

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// x_mm,y_mm,z_mm with full double precision.
inline std::string points_csv(const std::vector<Vec3>& pts) {
  std::string out = "x_mm,y_mm,z_mm\n";
  for (const auto& p : pts) out += format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(p.z()) + "\n";
  return out;
}

inline std::vector<Vec3> parse_points_csv(std::string_view text) {
  std::vector<Vec3> pts;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "x_mm,y_mm,z_mm") throw FormatError("points CSV: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x = 0, y = 0, z = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3) throw FormatError("points CSV: bad row '" + line + "'");
    pts.emplace_back(x, y, z);
  }
  return pts;
}

inline std::string audit_jsonl(const std::vector<AuditEntry>& audit) {
  std::string out;
  for (const auto& e : audit) out += canonical(to_json(e)) + "\n";
  return out;
}

/// Appends one transition to an audit log without rewriting earlier entries.
inline void append_audit_entry(const std::filesystem::path& path, const AuditEntry& e) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot open audit log " + path.string());
  out << canonical(to_json(e)) << "\n";
}

}  // namespace spinenav
