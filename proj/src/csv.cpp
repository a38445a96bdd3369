#include "syncsim/csv.hpp"

#include <charconv>
#include <cmath>

#include "syncsim/errors.hpp"

namespace syncsim {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_int(long long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ConfigError("cannot open output file: " + path.string());
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out_.put(',');
    out_ << cells[k];
  }
  out_.put('\n');
}

}  // namespace syncsim
