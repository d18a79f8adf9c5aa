#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace tpiston {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Writes one CSV row from already formatted fields.
class CsvRow {
 public:
  explicit CsvRow(std::ostream& out) : out_(out) {}
  ~CsvRow();
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(double value);
  CsvRow& operator<<(int value);
  CsvRow& operator<<(const std::string& value);

 private:
  void separator();
  std::ostream& out_;
  bool first_ = true;
};

/// Dumps a matrix as `row,col,re,im`, one entry per line.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXcd& matrix);

/// Writes through a temporary sibling file and renames it into place, so a
/// reader never observes a half-written file.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer);

}  // namespace tpiston
