#pragma once

// Artifact files. CSV and JSON numbers use %.17g so values round-trip and
// identical runs give byte-identical files. Every artifact carries the config
// hash: a `# config_hash=` first line in CSV, a `config_hash` key in JSON.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/grid.hpp"

namespace nkpp::io {

using json = nlohmann::ordered_json;

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// JSON-safe number: non-finite values become strings ("inf", "-inf", "nan").
inline json num(double v) { return std::isfinite(v) ? json(v) : json(fmt(v)); }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash, std::vector<std::string> header)
      : out_(path), columns_(header.size()) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << "# config_hash=" << config_hash << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }

  /// Cells are numbers or preformatted strings.
  struct Cell {
    Cell(double v) : text(fmt(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(std::size_t v) : text(std::to_string(v)) {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
    std::string text;
  };

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_) throw InternalError("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::string config_hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# config_hash=", 0) == 0) {
      t.config_hash = line.substr(14);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      t.header = split_csv_line(line);
      have_header = true;
    } else {
      t.rows.push_back(split_csv_line(line));
      if (t.rows.back().size() != t.header.size())
        throw ConfigError(path.string() + ": row " + std::to_string(t.rows.size()) + " has the wrong width");
    }
  }
  if (!have_header) throw ConfigError(path.string() + ": no header line");
  return t;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// Binary snapshot file: magic "NKPPFLD1", then int32 dim, int32 nx, int32 ny,
/// float64 Lx, Ly, lower_x, lower_y, uint64 snapshot count, and per snapshot
/// float64 t followed by nx*ny float64 values (row-major, little endian host
/// order).
inline void write_fields(const std::filesystem::path& path, const Grid& g, const std::vector<Field>& snaps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write("NKPPFLD1", 8);
  const std::int32_t hdr[3] = {g.dim, g.n[0], g.n[1]};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  const double geo[4] = {g.length[0], g.length[1], g.lower[0], g.lower[1]};
  out.write(reinterpret_cast<const char*>(geo), sizeof geo);
  const std::uint64_t count = snaps.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& f : snaps) {
    if (!(f.grid == g)) throw InternalError("write_fields: snapshot grid mismatch");
    out.write(reinterpret_cast<const char*>(&f.t), sizeof f.t);
    out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * 8));
  }
}

inline std::vector<Field> read_fields(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "NKPPFLD1", 8) != 0) throw ConfigError(path.string() + ": not a field file");
  std::int32_t hdr[3];
  double geo[4];
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  in.read(reinterpret_cast<char*>(geo), sizeof geo);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in) throw ConfigError(path.string() + ": truncated header");
  Grid g;
  g.dim = hdr[0];
  g.n = {hdr[1], hdr[2]};
  g.length = {geo[0], geo[1]};
  g.lower = {geo[2], geo[3]};
  g.validate();
  std::vector<Field> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    Field f(g, 0.0);
    in.read(reinterpret_cast<char*>(&f.t), sizeof f.t);
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * 8));
    if (!in) throw ConfigError(path.string() + ": truncated data");
    out.push_back(std::move(f));
  }
  return out;
}

struct ColumnDiff {
  std::string column;
  double max_rel = 0;  ///< max |a-b| / max(|a|, |b|, tiny)
  double max_abs = 0;
  std::size_t worst_row = 0;
  std::size_t mismatched_text = 0;  ///< non-numeric cells that differ
};

struct DiffReport {
  std::vector<ColumnDiff> columns;
  std::size_t rows = 0;
  double tolerance = 0;
  bool hash_mismatch = false;

  /// Columns with a relative difference above tolerance or differing text.
  std::vector<const ColumnDiff*> differing() const {
    std::vector<const ColumnDiff*> out;
    for (const auto& c : columns)
      if (c.max_rel > tolerance || c.mismatched_text > 0) out.push_back(&c);
    return out;
  }
};

inline bool parse_double(const std::string& s, double& v) {
  if (s == "inf") v = std::numeric_limits<double>::infinity();
  else if (s == "-inf") v = -std::numeric_limits<double>::infinity();
  else if (s == "nan") v = std::numeric_limits<double>::quiet_NaN();
  else {
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size();
  }
  return true;
}

/// Elementwise comparison of two CSV artifacts of the same schema. Throws
/// ConfigError on a schema mismatch.
inline DiffReport compare_csv(const CsvTable& a, const CsvTable& b, double tolerance) {
  if (a.header != b.header) throw ConfigError("compare: column headers differ");
  if (a.rows.size() != b.rows.size()) throw ConfigError("compare: row counts differ");
  DiffReport r;
  r.tolerance = tolerance;
  r.rows = a.rows.size();
  r.hash_mismatch = a.config_hash != b.config_hash;
  for (std::size_t c = 0; c < a.header.size(); ++c) {
    ColumnDiff d;
    d.column = a.header[c];
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const std::string& sa = a.rows[i][c];
      const std::string& sb = b.rows[i][c];
      if (sa == sb) continue;
      double x, y;
      if (!parse_double(sa, x) || !parse_double(sb, y) || !std::isfinite(x) || !std::isfinite(y)) {
        ++d.mismatched_text;
        continue;
      }
      const double abs = std::abs(x - y);
      const double rel = abs / std::max({std::abs(x), std::abs(y), 1e-300});
      if (rel > d.max_rel) {
        d.max_rel = rel;
        d.worst_row = i;
      }
      d.max_abs = std::max(d.max_abs, abs);
    }
    r.columns.push_back(d);
  }
  return r;
}

namespace detail {
inline void flatten(const json& j, const std::string& prefix, CsvTable& t) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), t);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", t);
  } else {
    t.header.push_back(prefix);
    t.rows[0].push_back(j.is_number() ? fmt(j.get<double>()) : j.is_string() ? j.get<std::string>() : j.dump());
  }
}
}  // namespace detail

/// JSON artifact as a one-row table keyed by leaf paths; `config_hash` goes to the table's hash.
inline CsvTable json_table(const json& j) {
  CsvTable t;
  t.rows.emplace_back();
  json body = j;
  if (body.is_object() && body.contains("config_hash")) {
    t.config_hash = body["config_hash"].get<std::string>();
    body.erase("config_hash");
  }
  detail::flatten(body, "", t);
  return t;
}

/// Field file as a table with columns (snapshot, t, index, value).
inline CsvTable fields_table(const std::vector<Field>& snaps) {
  CsvTable t;
  t.header = {"snapshot", "t", "index", "value"};
  for (std::size_t k = 0; k < snaps.size(); ++k)
    for (std::size_t i = 0; i < snaps[k].values.size(); ++i)
      t.rows.push_back({std::to_string(k), fmt(snaps[k].t), std::to_string(i), fmt(snaps[k].values[i])});
  return t;
}

/// Loads any artifact (.csv, .json, .bin) as a table.
inline CsvTable load_table(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return json_table(read_json(path));
  if (ext == ".bin") return fields_table(read_fields(path));
  return read_csv(path);
}

}  // namespace nkpp::io
