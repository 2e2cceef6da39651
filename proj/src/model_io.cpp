#include "ghsom/model_io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ghsom/config.hpp"
#include "ghsom/error.hpp"

namespace ghsom {

using nlohmann::json;

std::string encode_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::hex);
  if (ec != std::errc()) fail(ErrorCode::internal, "cannot encode double");
  return std::string(buf, ptr);
}

double decode_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v, std::chars_format::hex);
  if (text.empty() || ec != std::errc() || ptr != end)
    fail(ErrorCode::format, "malformed number '" + std::string(text) + "'");
  return negative ? -v : v;
}

std::string sha256_hex(std::string_view text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::internal, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

namespace {

json encode_vector(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(encode_double(x));
  return a;
}

// Field access with a uniform error for structurally invalid documents.
const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorCode::format, std::string("model file: missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::format, std::string("model file: field '") + key + "' has the wrong type");
  }
}

double get_double(const json& j, const char* key) {
  return decode_double(get<std::string>(j, key));
}

std::vector<double> get_vector(const json& j, const char* key) {
  std::vector<double> out;
  const json& a = field(j, key);
  if (!a.is_array()) fail(ErrorCode::format, std::string("model file: '") + key + "' is not a list");
  for (const json& x : a) {
    if (!x.is_string()) fail(ErrorCode::format, std::string("model file: '") + key + "' entry");
    out.push_back(decode_double(x.get<std::string>()));
  }
  return out;
}

json encode_params(const Params& p) {
  json j = to_json(p);
  // Exact encoding for every real-valued field.
  for (auto& [key, value] : j.items())
    if (value.is_number_float()) value = encode_double(value.get<double>());
  return j;
}

Params decode_params(const json& j) {
  if (!j.is_object()) fail(ErrorCode::format, "model file: params is not an object");
  json plain = j;
  for (auto& [key, value] : plain.items())
    if (value.is_string() && key != "growth_mode" && key != "tau1_reference" && value != "off")
      value = decode_double(value.get<std::string>());
  try {
    return params_from_json(plain);
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("model file: ") + e.what());
  }
}

json encode_body(const Hierarchy& h) {
  json body;
  body["n_samples"] = h.n_samples;
  body["dim"] = h.dim;
  body["root"] = h.root;
  body["next_id"] = h.next_id;
  body["seed"] = h.seed;
  body["params"] = encode_params(h.params);
  body["layer0"] = {{"m0", encode_vector(h.layer0.m0)},
                    {"mqe0", encode_double(h.layer0.mqe0)},
                    {"qe0", encode_double(h.layer0.qe0)}};
  json maps = json::array();
  for (const auto& [id, m] : h.maps) {
    json jm;
    jm["id"] = m.id;
    jm["layer"] = m.layer;
    jm["parent"] = m.parent ? json{{"map", m.parent->map}, {"row", m.parent->row},
                                   {"col", m.parent->col}}
                            : json(nullptr);
    jm["rows"] = m.rows;
    jm["cols"] = m.cols;
    jm["mqe"] = encode_double(m.mqe);
    jm["status"] = to_string(m.status);
    jm["qe_history"] = encode_vector(m.qe_history);
    jm["samples"] = m.samples;
    jm["seed"] = m.seed;
    jm["phases"] = m.phases;
    json units = json::array();
    for (const Unit& u : m.units) {
      json ju;
      ju["row"] = u.row;
      ju["col"] = u.col;
      ju["weight"] = encode_vector(u.weight);
      ju["assigned"] = u.assigned;
      ju["qe"] = encode_double(u.qe);
      ju["mqe"] = encode_double(u.mqe);
      ju["wd"] = encode_double(u.wd);
      ju["va"] = encode_double(u.va);
      ju["act"] = encode_double(u.act);
      ju["active"] = u.active;
      ju["child"] = u.child ? json(*u.child) : json(nullptr);
      units.push_back(std::move(ju));
    }
    jm["units"] = std::move(units);
    maps.push_back(std::move(jm));
  }
  body["maps"] = std::move(maps);
  json audit = json::array();
  for (const AuditEntry& e : h.audit)
    audit.push_back({{"seq", e.seq},
                     {"map", e.map},
                     {"row", e.row},
                     {"col", e.col},
                     {"rule", e.rule},
                     {"lhs", encode_double(e.lhs)},
                     {"rhs", encode_double(e.rhs)},
                     {"action", e.action}});
  body["audit"] = std::move(audit);
  body["audit_seq"] = h.audit_seq;
  return body;
}

void check_structure(const Hierarchy& h) {
  if (!h.has_map(h.root)) fail(ErrorCode::format, "model file: root map missing");
  for (const auto& [id, m] : h.maps) {
    if (m.rows <= 0 || m.cols <= 0 ||
        m.units.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols))
      fail(ErrorCode::format, "model file: map " + std::to_string(id) + " has an inconsistent lattice");
    for (std::size_t i = 0; i < m.units.size(); ++i) {
      const Unit& u = m.units[i];
      if (m.index({u.row, u.col}) != i || !m.contains({u.row, u.col}))
        fail(ErrorCode::format, "model file: unit order broken in map " + std::to_string(id));
      if (u.weight.size() != h.dim)
        fail(ErrorCode::format, "model file: weight dimension mismatch in map " + std::to_string(id));
      for (SampleId s : u.assigned)
        if (s >= h.n_samples) fail(ErrorCode::format, "model file: sample id out of range");
      if (u.child) {
        if (!h.has_map(*u.child)) fail(ErrorCode::format, "model file: dangling child link");
        const MapGrid& c = h.maps.at(*u.child);
        if (!c.parent || c.parent->map != id || c.parent->pos() != GridPos{u.row, u.col} ||
            c.layer != m.layer + 1)
          fail(ErrorCode::format, "model file: child map " + std::to_string(*u.child) +
                                      " does not point back to its parent");
      }
    }
    if (m.parent) {
      if (!h.has_map(m.parent->map)) fail(ErrorCode::format, "model file: dangling parent link");
      const MapGrid& p = h.maps.at(m.parent->map);
      if (!p.contains(m.parent->pos()) || p.at(m.parent->pos()).child != id)
        fail(ErrorCode::format, "model file: parent of map " + std::to_string(id) +
                                    " does not link to it");
    } else if (id != h.root) {
      fail(ErrorCode::format, "model file: orphan map " + std::to_string(id));
    }
  }
}

Hierarchy decode_body(const json& body) {
  Hierarchy h;
  h.n_samples = get<std::size_t>(body, "n_samples");
  h.dim = get<std::size_t>(body, "dim");
  h.root = get<MapId>(body, "root");
  h.next_id = get<MapId>(body, "next_id");
  h.seed = get<std::uint64_t>(body, "seed");
  h.params = decode_params(field(body, "params"));
  const json& l0 = field(body, "layer0");
  h.layer0.m0 = get_vector(l0, "m0");
  h.layer0.mqe0 = get_double(l0, "mqe0");
  h.layer0.qe0 = get_double(l0, "qe0");
  const json& maps = field(body, "maps");
  if (!maps.is_array()) fail(ErrorCode::format, "model file: maps is not a list");
  for (const json& jm : maps) {
    MapGrid m;
    m.id = get<MapId>(jm, "id");
    m.layer = get<int>(jm, "layer");
    const json& parent = field(jm, "parent");
    if (!parent.is_null())
      m.parent = UnitRef{get<MapId>(parent, "map"), get<int>(parent, "row"), get<int>(parent, "col")};
    m.rows = get<int>(jm, "rows");
    m.cols = get<int>(jm, "cols");
    m.mqe = get_double(jm, "mqe");
    const auto status = growth_status_from_string(get<std::string>(jm, "status"));
    if (!status) fail(ErrorCode::format, "model file: unknown map status");
    m.status = *status;
    m.qe_history = get_vector(jm, "qe_history");
    m.samples = get<std::vector<SampleId>>(jm, "samples");
    m.seed = get<std::uint64_t>(jm, "seed");
    m.phases = get<int>(jm, "phases");
    const json& units = field(jm, "units");
    if (!units.is_array()) fail(ErrorCode::format, "model file: units is not a list");
    for (const json& ju : units) {
      Unit u;
      u.row = get<int>(ju, "row");
      u.col = get<int>(ju, "col");
      u.weight = get_vector(ju, "weight");
      u.assigned = get<std::vector<SampleId>>(ju, "assigned");
      u.qe = get_double(ju, "qe");
      u.mqe = get_double(ju, "mqe");
      u.wd = get_double(ju, "wd");
      u.va = get_double(ju, "va");
      u.act = get_double(ju, "act");
      u.active = get<bool>(ju, "active");
      const json& child = field(ju, "child");
      if (!child.is_null()) u.child = get<MapId>(ju, "child");
      m.units.push_back(std::move(u));
    }
    if (!h.maps.emplace(m.id, std::move(m)).second)
      fail(ErrorCode::format, "model file: duplicate map id");
  }
  for (const json& je : field(body, "audit")) {
    AuditEntry e;
    e.seq = get<std::uint64_t>(je, "seq");
    e.map = get<MapId>(je, "map");
    e.row = get<int>(je, "row");
    e.col = get<int>(je, "col");
    e.rule = get<std::string>(je, "rule");
    e.lhs = get_double(je, "lhs");
    e.rhs = get_double(je, "rhs");
    e.action = get<std::string>(je, "action");
    h.audit.push_back(std::move(e));
  }
  h.audit_seq = get<std::uint64_t>(body, "audit_seq");
  check_structure(h);
  return h;
}

}  // namespace

std::string serialize_model(const Hierarchy& h) {
  const json body = encode_body(h);
  json doc;
  doc["format"] = kModelFormatName;
  doc["format_version"] = kModelFormatVersion;
  doc["digest"] = "sha256:" + sha256_hex(body.dump());
  doc["body"] = body;
  return doc.dump(1) + "\n";
}

Hierarchy deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format, "model file is not valid (parse error at byte " +
                                std::to_string(e.byte) + ")");
  }
  if (!doc.is_object() || doc.value("format", std::string()) != kModelFormatName)
    fail(ErrorCode::format, "not a ghsom model file");
  const int version = get<int>(doc, "format_version");
  if (version != kModelFormatVersion)
    fail(ErrorCode::version, "model format_version " + std::to_string(version) +
                                 " is not supported (this build reads version " +
                                 std::to_string(kModelFormatVersion) + ")");
  const json& body = field(doc, "body");
  const std::string digest = get<std::string>(doc, "digest");
  if (digest != "sha256:" + sha256_hex(body.dump()))
    fail(ErrorCode::integrity, "model file digest does not match its contents");
  return decode_body(body);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::io, "cannot move model into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void save_model(const Hierarchy& h, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(h));
}

Hierarchy load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace ghsom
