#include "squire/pipeline/fasta.hpp"

#include <cctype>
#include <fstream>

namespace squire {

std::vector<FastaRecord> read_fasta(std::istream& in) {
  std::vector<FastaRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      records.push_back(FastaRecord{line.substr(1), {}});
      continue;
    }
    if (records.empty()) throw FastaError("line " + std::to_string(lineno) + ": sequence data before first header");
    for (std::size_t col = 0; col < line.size(); ++col) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(line[col])));
      if (c != 'A' && c != 'C' && c != 'G' && c != 'T') {
        throw FastaError("line " + std::to_string(lineno) + ", column " + std::to_string(col + 1) +
                         ": invalid base '" + std::string(1, line[col]) + "'");
      }
      records.back().bases.push_back(c);
    }
  }
  return records;
}

std::vector<FastaRecord> read_fasta_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FastaError("cannot open " + path);
  try {
    return read_fasta(in);
  } catch (const FastaError& e) {
    throw FastaError(path + ": " + e.what());
  }
}

}  // namespace squire
