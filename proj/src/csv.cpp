#include "rotorcage/csv.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rotorcage/common.hpp"

namespace rotorcage {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path,
                  const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file: " + path);

  CsvTable table;
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw InputError("empty CSV file: " + path);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_fields(line);
  if (!expected_header.empty() && table.header != expected_header) {
    std::string want;
    for (size_t i = 0; i < expected_header.size(); ++i)
      want += (i ? "," : "") + expected_header[i];
    throw InputError(path + ": expected header '" + want + "', got '" + line +
                     "'");
  }

  const size_t ncol = table.header.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != ncol)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncol) + " fields, got " +
                       std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(ncol);
    for (const auto& f : fields) {
      char* end = nullptr;
      double v = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size())
        throw InputError(path + ":" + std::to_string(lineno) +
                         ": not a number: '" + f + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write CSV file: " + path);
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_g10(row[i]);
    out << "\n";
  }
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace rotorcage
