#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace churnnet::csv {

// Splits one CSV line. Supports double-quoted fields with "" escapes; no
// embedded newlines (CDR feeds and our own exports never produce them).
std::vector<std::string> split_line(const std::string& line);

struct Reader {
  explicit Reader(std::istream& in) : in_(in) {}
  // Reads the next row; empty optional at end of stream. Blank lines skipped.
  std::optional<std::vector<std::string>> next();

 private:
  std::istream& in_;
};

// Formats a double with enough digits to round-trip through text. All report
// writers go through this so reruns produce byte-identical files.
std::string format_double(double v);

std::string escape(const std::string& field);

}  // namespace churnnet::csv
