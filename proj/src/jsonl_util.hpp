#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "startnet/common.hpp"

namespace startnet::detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  return out;
}

/// Streams a .jsonl file record by record. Parse failures carry the
/// 1-based line number. `fn(line_number, record)` is called per line.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(long, const nlohmann::json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line_number) +
                            ": parse error: " + e.what());
    }
    try {
      fn(line_number, record);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line_number) +
                            ": malformed record: " + e.what());
    }
  }
}

}  // namespace startnet::detail
