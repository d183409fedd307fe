#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Snapshot helper: the first run writes the computed value; later runs
// return the stored one so the test pins it. Delete a file under
// tests/golden/ to re-baseline a value on purpose.
namespace golden {

inline std::string pin(const std::string& name, const std::string& computed) {
  namespace fs = std::filesystem;
  const fs::path file = fs::path(SSMLAB_GOLDEN_DIR) / name;
  if (!fs::exists(file)) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    out << computed;
    return computed;
  }
  std::ifstream in(file, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace golden
