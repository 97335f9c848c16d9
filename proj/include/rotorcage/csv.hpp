#pragma once

#include <string>
#include <vector>

namespace rotorcage {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads a numeric CSV. When expected_header is non-empty the file's header
// must match it exactly (after whitespace trimming). Ragged or non-numeric
// rows raise InputError with the 1-based line number.
CsvTable read_csv(const std::string& path,
                  const std::vector<std::string>& expected_header = {});

// Writes rows with a header line; values formatted at 10 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace rotorcage
