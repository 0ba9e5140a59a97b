#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace wfm {

using nlohmann::json;

// Errors carry a machine-readable code so the CLI can emit structured
// diagnostics on stderr.
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_file", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed_json", path + ": " + e.what());
  }
}

// Temp file + rename so partially written outputs are never observable.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_failed", "cannot open " + tmp.string());
    out << content;
    if (!out) throw Error("write_failed", "short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline void save_json_file(const std::string& path, const json& j, int indent = 1) {
  atomic_write(path, j.dump(indent) + "\n");
}

// Rejects keys outside the allowed set; typos in config files should fail
// loudly rather than be ignored.
inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& context) {
  if (!j.is_object()) throw Error("bad_config", context + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw Error("bad_config", context + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace wfm
