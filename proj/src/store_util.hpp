#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "chainflow/error.hpp"
#include "json.hpp"

namespace chainflow::detail {

using ordered_json = nlohmann::ordered_json;

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<ordered_json>& rows) {
  std::string text;
  for (const auto& row : rows) {
    text += row.dump();
    text += '\n';
  }
  write_text(path, text);
}

inline std::vector<ordered_json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<ordered_json> rows;
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(ordered_json::parse(line));
    } catch (const ordered_json::exception& e) {
      throw Error(ErrorKind::Schema,
                  path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

inline void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

/// Reads header.json and checks its "format" field.
inline ordered_json read_header(const std::filesystem::path& dir, std::string_view format) {
  const auto path = dir / "header.json";
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::FormatVersion,
                "no header in " + dir.string() + " (expected " + std::string(format) + ")");
  }
  ordered_json header;
  try {
    in >> header;
  } catch (const ordered_json::exception&) {
    throw Error(ErrorKind::FormatVersion, "unreadable header " + path.string());
  }
  if (!header.is_object() || !header.contains("format") ||
      header["format"] != std::string(format)) {
    throw Error(ErrorKind::FormatVersion,
                path.string() + ": expected format " + std::string(format));
  }
  return header;
}

template <typename T>
T field(const ordered_json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end()) throw Error(ErrorKind::Schema, std::string("missing key '") + key + "'");
  try {
    return it->get<T>();
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("bad key '") + key + "': " + e.what());
  }
}

}  // namespace chainflow::detail
