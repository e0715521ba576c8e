#pragma once

#include <iosfwd>
#include <string>

#include "qbranch/rabi.hpp"

namespace qbranch {

// Decimal form of a double with 17 significant digits; every value written
// this way parses back to the identical bit pattern.
std::string format_double(double x);

// Write/read the trace CSV schema `t,p_g,p_e` with LF line endings.  Lines
// starting with '#' are ignored on read.  Malformed input (wrong header,
// wrong field count, non-numeric fields, non-increasing times) raises
// std::invalid_argument.
void write_trace_csv(std::ostream& out, const ProbabilityTrace& trace);
ProbabilityTrace read_trace_csv(std::istream& in);
ProbabilityTrace read_trace_csv_file(const std::string& path);

}  // namespace qbranch
