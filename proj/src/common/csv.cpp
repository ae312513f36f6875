#include "fibdim/csv.hpp"

#include "fibdim/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace fibdim {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema, int version,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), columns_(columns.size()) {
  if (!out_) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out_ << "# schema: " << schema << "/" << version << "\n";
  for (std::size_t k = 0; k < columns.size(); ++k) out_ << (k ? "," : "") << columns[k];
  out_ << "\n";
}

void CsvWriter::separator() {
  if (in_row_++ > 0) out_ << ",";
}

CsvWriter& CsvWriter::cell(double x) {
  separator();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  separator();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    out_ << '"';
    for (char c : s) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  } else {
    out_ << s;
  }
  return *this;
}

CsvWriter& CsvWriter::empty() {
  separator();
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw Error(ErrorKind::Io, "'" + path_ + "': row has " + std::to_string(in_row_) +
                                   " cells, expected " + std::to_string(columns_));
  }
  out_ << "\n";
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw Error(ErrorKind::Io, "error writing '" + path_ + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return static_cast<int>(k);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    table.rows.push_back(split_line(line));
    if (table.rows.back().size() != table.header.size()) {
      throw Error(ErrorKind::Io, "'" + path + "': ragged row " + std::to_string(table.rows.size()));
    }
  }
  if (!have_header) throw Error(ErrorKind::Io, "'" + path + "': no header row");
  return table;
}

}  // namespace fibdim
