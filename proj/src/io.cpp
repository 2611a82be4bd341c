#include "dcg/io.hpp"

#include "dcg/errors.hpp"
#include "schemas.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

namespace dcg {

using nlohmann::json;

void Dataset::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw InvalidArgument("Dataset::add_row: width mismatch");
  rows.push_back(std::move(row));
}

std::vector<double> Dataset::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
  throw InvalidArgument("Dataset::column: no column named " + std::string(name));
}

std::string format_number(double v, int significant) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, significant);
  if (res.ec != std::errc{}) throw NumericalFailure("format_number: to_chars failed");
  return std::string(buf, res.ptr);
}

std::string to_csv(const Dataset& data, int significant) {
  std::string out;
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    if (c) out += ',';
    out += data.columns[c];
  }
  out += '\n';
  for (const auto& row : data.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c], significant);
    }
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError(path.string(), "cannot open for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ConfigError(path.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError(path.string(), "rename failed: " + ec.message());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const json& config) { return hex64(fnv1a64(config.dump())); }

// ---------------------------------------------------------------------------

namespace {

std::string child(const std::string& path, const std::string& key) {
  std::string esc;
  for (char c : key) {
    if (c == '~') esc += "~0";
    else if (c == '/') esc += "~1";
    else esc += c;
  }
  return path + "/" + esc;
}

bool type_matches(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  return false;
}

std::optional<SchemaViolation> check(const json& v, const json& s, const std::string& path) {
  auto fail = [&](std::string msg) { return SchemaViolation{path.empty() ? "/" : path, std::move(msg)}; };

  if (auto t = s.find("type"); t != s.end()) {
    bool ok = false;
    if (t->is_string()) {
      ok = type_matches(v, t->get<std::string>());
    } else {
      for (const auto& alt : *t) ok = ok || type_matches(v, alt.get<std::string>());
    }
    if (!ok) return fail("expected type " + t->dump());
  }
  if (auto e = s.find("enum"); e != s.end()) {
    bool ok = false;
    for (const auto& alt : *e) ok = ok || alt == v;
    if (!ok) return fail("value " + v.dump() + " not in " + e->dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (auto m = s.find("minimum"); m != s.end() && x < m->get<double>()) {
      return fail("must be >= " + m->dump());
    }
    if (auto m = s.find("exclusiveMinimum"); m != s.end() && !(x > m->get<double>())) {
      return fail("must be > " + m->dump());
    }
    if (auto m = s.find("maximum"); m != s.end() && x > m->get<double>()) {
      return fail("must be <= " + m->dump());
    }
  }
  if (v.is_object()) {
    const json empty = json::object();
    const auto pit = s.find("properties");
    const json& props = pit != s.end() ? *pit : empty;
    if (auto r = s.find("required"); r != s.end()) {
      for (const auto& key : *r) {
        if (!v.contains(key.get<std::string>())) {
          return SchemaViolation{child(path, key.get<std::string>()), "required key missing"};
        }
      }
    }
    const auto ap = s.find("additionalProperties");
    const bool closed = ap != s.end() && ap->is_boolean() && !ap->get<bool>();
    for (auto it = v.begin(); it != v.end(); ++it) {
      const auto sub = props.find(it.key());
      if (sub == props.end()) {
        if (closed) return SchemaViolation{child(path, it.key()), "unknown key"};
        continue;
      }
      if (auto bad = check(it.value(), *sub, child(path, it.key()))) return bad;
    }
  }
  if (v.is_array()) {
    if (auto m = s.find("minItems"); m != s.end() && v.size() < m->get<std::size_t>()) {
      return fail("needs at least " + m->dump() + " items");
    }
    if (auto items = s.find("items"); items != s.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto bad = check(v[i], *items, path + "/" + std::to_string(i))) return bad;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<SchemaViolation> validate_schema(const json& instance, const json& schema) {
  return check(instance, schema, "");
}

const json& config_schema() {
  static const json s = json::parse(embedded::kConfigSchema);
  return s;
}

const json& sequence_schema() {
  static const json s = json::parse(embedded::kSequenceSchema);
  return s;
}

void check_schema_version(const json& doc, int supported_major) {
  const auto it = doc.find("schema_version");
  if (it == doc.end() || !it->is_string()) throw ConfigError("/schema_version", "missing or not a string");
  const std::string v = it->get<std::string>();
  int major = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), major);
  if (res.ec != std::errc{} || res.ptr == v.data()) throw ConfigError("/schema_version", "malformed version " + v);
  if (major > supported_major) {
    throw ConfigError("/schema_version", "version " + v + " is newer than supported major " +
                                             std::to_string(supported_major));
  }
}

}  // namespace dcg
