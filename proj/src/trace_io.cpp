#include "qbranch/trace_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qbranch {
namespace {

double parse_field(const std::string& field, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw std::invalid_argument("trace csv: non-numeric field on line " +
                                std::to_string(line_no));
  }
  return value;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trace_csv(std::ostream& out, const ProbabilityTrace& trace) {
  out << "t,p_g,p_e\n";
  for (const auto& [t, pg] : trace.samples) {
    out << format_double(t) << ',' << format_double(pg) << ','
        << format_double(1.0 - pg) << '\n';
  }
}

ProbabilityTrace read_trace_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  ProbabilityTrace trace;
  double last_t = -1.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!saw_header) {
      if (line != "t,p_g,p_e") {
        throw std::invalid_argument("trace csv: expected header t,p_g,p_e");
      }
      saw_header = true;
      continue;
    }
    std::istringstream row(line);
    std::string f0, f1, f2, extra;
    if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') ||
        !std::getline(row, f2, ',')) {
      throw std::invalid_argument("trace csv: expected 3 fields on line " +
                                  std::to_string(line_no));
    }
    if (std::getline(row, extra, ',')) {
      throw std::invalid_argument("trace csv: too many fields on line " +
                                  std::to_string(line_no));
    }
    double t = parse_field(f0, line_no);
    double pg = parse_field(f1, line_no);
    parse_field(f2, line_no);  // p_e is redundant but must still be numeric
    if (t < 0.0) {
      throw std::invalid_argument("trace csv: negative time on line " +
                                  std::to_string(line_no));
    }
    if (!(t > last_t)) {
      throw std::invalid_argument("trace csv: times must be strictly increasing");
    }
    if (!(pg >= -1e-9 && pg <= 1.0 + 1e-9)) {
      throw std::invalid_argument("trace csv: p_g outside [0, 1] on line " +
                                  std::to_string(line_no));
    }
    last_t = t;
    trace.samples.emplace_back(t, pg);
  }
  if (!saw_header) throw std::invalid_argument("trace csv: empty input");
  return trace;
}

ProbabilityTrace read_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("trace csv: cannot open " + path);
  return read_trace_csv(in);
}

}  // namespace qbranch
