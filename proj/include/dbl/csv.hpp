#pragma once

// CSV ingestion with a JSON sidecar describing attribute kinds and missing
// tokens. Without a sidecar, kinds are inferred: a column whose non-missing
// cells all parse as numbers is numeric.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbl/common.hpp"
#include "dbl/dataset.hpp"

namespace dbl {

struct SidecarSchema {
  std::vector<AttributeMeta> attributes;
  std::optional<std::string> class_name;
};

inline SidecarSchema load_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open sidecar '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("sidecar '" + path + "': " + e.what());
  }
  SidecarSchema schema;
  if (!doc.contains("attributes") || !doc["attributes"].is_array())
    throw config_error("sidecar '" + path + "': missing 'attributes' array");
  for (const auto& item : doc["attributes"]) {
    AttributeMeta meta;
    meta.name = item.at("name").get<std::string>();
    const auto kind = item.at("kind").get<std::string>();
    if (kind == "numeric")
      meta.kind = AttrKind::numeric;
    else if (kind == "categorical")
      meta.kind = AttrKind::categorical;
    else
      throw config_error("sidecar '" + path + "': attribute '" + meta.name +
                         "' has unknown kind '" + kind + "'");
    if (item.contains("missing_tokens"))
      meta.missing_tokens = item["missing_tokens"].get<std::vector<std::string>>();
    else
      meta.missing_tokens = {"?", ""};
    schema.attributes.push_back(std::move(meta));
  }
  if (doc.contains("class")) schema.class_name = doc["class"].at("name").get<std::string>();
  return schema;
}

namespace detail {

// Split one CSV record. Handles double-quoted fields with "" escapes; no
// embedded newlines.
inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw error("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

inline bool parse_number(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return false;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline bool is_missing_token(const AttributeMeta& meta, const std::string& cell) {
  for (const auto& tok : meta.missing_tokens)
    if (cell == tok) return true;
  return false;
}

}  // namespace detail

// Load a header-first CSV. When a sidecar is given, its attribute names must
// match the header (any column order); otherwise kinds are inferred and the
// default missing tokens "?" and "" apply. The class column is the sidecar's
// class name when set, else the last column. With allow_unlabeled, a file
// whose header carries only the attribute columns loads as unlabeled data.
inline RawDataset load_csv(const std::string& path, const SidecarSchema* schema = nullptr,
                           bool allow_empty = false, bool allow_unlabeled = false) {
  std::ifstream in(path);
  if (!in) throw error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      return true;
    }
    return false;
  };

  if (!next_line(line)) throw error("'" + path + "': empty file (no header)");
  const auto header = detail::split_csv_line(line, line_no);

  RawDataset raw;
  std::vector<std::int64_t> column_of;  // per attribute, source column
  std::int64_t class_column = -1;

  if (schema) {
    std::vector<std::int64_t> col_index(header.size());
    auto find_column = [&](const std::string& name) -> std::int64_t {
      for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return static_cast<std::int64_t>(c);
      return -1;
    };
    raw.class_name = schema->class_name ? *schema->class_name : header.back();
    class_column = find_column(raw.class_name);
    if (class_column < 0) {
      if (!allow_unlabeled)
        throw config_error("'" + path + "': class column '" + raw.class_name + "' not in header");
      raw.labeled = false;
    }
    for (const auto& meta : schema->attributes) {
      const auto col = find_column(meta.name);
      if (col < 0) throw config_error("'" + path + "': column '" + meta.name + "' not in header");
      if (col == class_column)
        throw config_error("'" + path + "': '" + meta.name + "' is both attribute and class");
      column_of.push_back(col);
      raw.meta.push_back(meta);
    }
  } else {
    if (header.size() < 2) throw error("'" + path + "': need at least one attribute and a class");
    class_column = static_cast<std::int64_t>(header.size()) - 1;
    raw.class_name = header.back();
    for (std::size_t c = 0; c + 1 < header.size(); ++c) {
      AttributeMeta meta;
      meta.name = header[c];
      meta.kind = AttrKind::categorical;  // revisited after the scan below
      meta.missing_tokens = {"?", ""};
      column_of.push_back(static_cast<std::int64_t>(c));
      raw.meta.push_back(std::move(meta));
    }
  }

  // First pass: read raw fields.
  std::vector<std::vector<std::string>> records;
  while (next_line(line)) {
    auto fields = detail::split_csv_line(line, line_no);
    if (fields.size() != header.size())
      throw error("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " cells, got " + std::to_string(fields.size()));
    records.push_back(std::move(fields));
  }
  if (records.empty() && !allow_empty) throw error("'" + path + "': no data rows");

  // Infer kinds when no sidecar: numeric iff every non-missing cell parses.
  if (!schema) {
    for (std::size_t a = 0; a < raw.meta.size(); ++a) {
      auto& meta = raw.meta[a];
      bool any_value = false;
      bool all_numeric = true;
      for (const auto& rec : records) {
        const auto& cell = rec[column_of[a]];
        if (detail::is_missing_token(meta, cell)) continue;
        any_value = true;
        double v;
        if (!detail::parse_number(cell, v)) {
          all_numeric = false;
          break;
        }
      }
      meta.kind = (any_value && all_numeric) ? AttrKind::numeric : AttrKind::categorical;
    }
  }

  raw.rows.reserve(records.size());
  raw.row_class.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    std::vector<RawCell> cells(raw.meta.size());
    for (std::size_t a = 0; a < raw.meta.size(); ++a) {
      const auto& text = records[r][column_of[a]];
      const auto& meta = raw.meta[a];
      if (detail::is_missing_token(meta, text)) {
        cells[a] = RawCell::make_missing();
      } else if (meta.kind == AttrKind::numeric) {
        double v;
        if (!detail::parse_number(text, v))
          throw error("'" + path + "' line " + std::to_string(r + 2) + ": cell '" + text +
                      "' in numeric column '" + meta.name + "' does not parse");
        cells[a] = RawCell::make_number(v);
      } else {
        cells[a] = RawCell::make_label(text);
      }
    }
    raw.rows.push_back(std::move(cells));
    if (raw.labeled && class_column >= 0) {
      const auto& label = records[r][class_column];
      if (label.empty())
        throw error("'" + path + "' line " + std::to_string(r + 2) + ": empty class cell");
      raw.row_class.push_back(label);
    } else {
      raw.row_class.emplace_back();
    }
  }
  return raw;
}

}  // namespace dbl
