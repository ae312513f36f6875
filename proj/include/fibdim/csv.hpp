#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace fibdim {

// Shortest decimal text that reads back to the same double. Locale
// independent; "nan" and "inf" for non-finite values.
std::string format_double(double x);

// Writes a CSV file whose first line is "# schema: <name>/<version>"
// followed by the column header. Throws Error(Io) naming the path.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema, int version,
            const std::vector<std::string>& columns);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(long x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(const char* s) { return cell(std::string(s)); }
  CsvWriter& empty();
  void end_row();
  void close();

 private:
  void separator();
  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

// Reads a CSV written by CsvWriter (or any file with an optional leading
// "# ..." line and a header row). Returns header and rows of raw cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};
CsvTable read_csv(const std::string& path);

}  // namespace fibdim
