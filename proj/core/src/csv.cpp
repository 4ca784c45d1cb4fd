#include "churnnet/csv.hpp"

#include <cmath>
#include <cstdio>

namespace churnnet::csv {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<std::vector<std::string>> Reader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    bool blank = true;
    for (char c : line) {
      if (c != ' ' && c != '\t' && c != '\r') {
        blank = false;
        break;
      }
    }
    if (blank) continue;
    return split_line(line);
  }
  return std::nullopt;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  // shortest of 15/16/17 significant digits that round-trips
  for (int prec = 15; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v || prec == 17) return buf;
  }
  return "";
}

std::string escape(const std::string& field) {
  bool needs = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n') {
      needs = true;
      break;
    }
  }
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace churnnet::csv
