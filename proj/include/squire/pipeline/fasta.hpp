#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace squire {

struct FastaRecord {
  std::string name;
  std::string bases;  // upper-case ACGT
};

class FastaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses '>' header lines followed by sequence lines. Bases are
// case-insensitive ACGT; anything else is rejected with its line number.
std::vector<FastaRecord> read_fasta(std::istream& in);
std::vector<FastaRecord> read_fasta_file(const std::string& path);

}  // namespace squire
