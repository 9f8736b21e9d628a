#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json_text.hpp"
#include "nlsobs/experiment.hpp"

namespace nlsobs {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

namespace {

bool is_scalar(const json& j) { return !j.is_array() && !j.is_object(); }

void write_scalar(const json& j, std::string& out) {
  if (j.is_number_float()) {
    const double x = j.get<double>();
    out += std::isfinite(x) ? format_double(x) : "\"" + format_double(x) + "\"";
  } else {
    out += j.dump(-1, ' ', false, json::error_handler_t::strict);
  }
}

void write(const json& j, int depth, std::string& out) {
  const std::string pad(2 * (depth + 1), ' ');
  const std::string close(2 * depth, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, value] : j.items()) {  // std::map storage: byte order
      if (!first) out += ",\n";
      first = false;
      out += pad + json(key).dump() + ": ";
      write(value, depth + 1, out);
    }
    out += "\n" + close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool flat = std::all_of(j.begin(), j.end(), is_scalar);
    out += flat ? "[" : "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += flat ? ", " : ",\n";
      if (!flat) out += pad;
      write(j[i], depth + 1, out);
    }
    out += flat ? "]" : "\n" + close + "]";
  } else {
    write_scalar(j, out);
  }
}

}  // namespace

std::string dump_sorted(const json& j) {
  std::string out;
  write(j, 0, out);
  out += "\n";
  return out;
}

}  // namespace detail

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos && (s.empty() || (s.front() != ' ' && s.back() != ' ')))
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(double x) const { return format_double(x); }
    std::string operator()(const std::string& x) const { return x; }
    std::string operator()(bool x) const { return x ? "true" : "false"; }
  };
  return std::visit(V{}, c);
}

json cell_json(const Cell& c) {
  return std::visit([](const auto& x) { return json(x); }, c);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + p.string());
}

}  // namespace

std::string table_to_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_field(fields[i]);
    }
    out += "\r\n";
  };
  line(t.columns);
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw ShapeError("table row width differs from the header");
    std::vector<std::string> f;
    f.reserve(row.size());
    for (const auto& c : row) f.push_back(cell_text(c));
    line(f);
  }
  return out;
}

std::string record_to_json(const RunRecord& r) {
  json j = json::object();
  j["kind"] = r.kind;
  j["config"] = r.config_json.empty() ? json::object() : json::parse(r.config_json);
  j["version"] = r.version;
  j["exit_code"] = r.exit_code;
  j["diagnostics"] = r.diagnostics;
  json summary = json::object();
  for (const auto& [k, v] : r.summary) summary[k] = cell_json(v);
  j["summary"] = summary;
  json tables = json::object();
  for (const auto& [name, t] : r.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) {
      json jr = json::array();
      for (const auto& c : row) jr.push_back(cell_json(c));
      rows.push_back(std::move(jr));
    }
    tables[name] = {{"columns", t.columns}, {"rows", rows}};
  }
  j["tables"] = tables;
  return detail::dump_sorted(j);
}

std::vector<std::filesystem::path> export_record(const RunRecord& r, ExportFormat format,
                                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  if (format == ExportFormat::Json) {
    written.push_back(dir / "record.json");
    write_file(written.back(), record_to_json(r));
    return written;
  }
  for (const auto& [name, t] : r.tables) {
    written.push_back(dir / (name + ".csv"));
    write_file(written.back(), table_to_csv(t));
  }
  Table summary;
  summary.columns = {"key", "value"};
  for (const auto& [k, v] : r.summary) summary.rows.push_back({k, cell_text(v)});
  written.push_back(dir / "summary.csv");
  write_file(written.back(), table_to_csv(summary));
  return written;
}

}  // namespace nlsobs
