#include "tpiston/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace tpiston {

std::string format_double(double value) {
  std::array<char, 32> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (result.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return {buffer.data(), result.ptr};
}

CsvRow::~CsvRow() { out_ << '\n'; }

void CsvRow::separator() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvRow& CsvRow::operator<<(double value) {
  separator();
  out_ << format_double(value);
  return *this;
}

CsvRow& CsvRow::operator<<(int value) {
  separator();
  out_ << value;
  return *this;
}

CsvRow& CsvRow::operator<<(const std::string& value) {
  separator();
  out_ << value;
  return *this;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXcd& matrix) {
  out << "row,col,re,im\n";
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      CsvRow(out) << static_cast<int>(i) << static_cast<int>(j) << matrix(i, j).real()
                  << matrix(i, j).imag();
    }
  }
}

void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  try {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tpiston
