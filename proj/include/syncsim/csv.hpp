#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace syncsim {

/// Shortest round-trip decimal form of a double (locale-independent,
/// deterministic across reruns). Non-finite values print as "nan"/"inf".
std::string format_double(double v);

std::string format_int(long long v);

/// Line-oriented CSV writer: no quoting (all cells this project emits are
/// plain tokens), one '\n' per row, stream opened in binary mode so output
/// bytes are platform-independent.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void write_row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
};

}  // namespace syncsim
