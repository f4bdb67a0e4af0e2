#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esbmix::cli {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric table read from a CSV with one or two columns.
struct DataTable {
  std::size_t columns = 0;
  std::vector<std::vector<double>> rows;
};

/// Every row must hold the same number (1 or 2) of finite numbers; blank
/// lines are skipped. With header = true the first nonblank line is skipped.
DataTable read_data_csv(const std::filesystem::path& path, bool header);

/// Number formatting shared by every CSV writer:
/// 12 significant digits, "NA" for NaN, "inf"/"-inf" for infinities.
std::string format_number(double x);

/// Accumulates an RFC-4180-style table (comma separator, LF endings) and
/// writes it in one go.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string text_;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace esbmix::cli
