#pragma once

#include <string>
#include <string_view>

#include "ctrlcert/system.hpp"

namespace ctrlcert {

// Text format for a system description, '#' starts a comment:
//
//   n = 2
//   m = 1
//   A = [0 1; 0 0]
//   B = [0; 1]
//   control_set = box 1.0
//
// Keys appear in this order. A box takes one half-width (replicated across
// all axes) or m of them; a ball takes a single radius. Malformed text
// throws ParseError with a position; well-formed text with bad semantics
// (B all zero, radius <= 0, ...) throws ValidationError.
LinearSystem parse_system(std::string_view text);

// Inverse of parse_system up to whitespace: parse(serialize(sys)) returns a
// bit-identical system. Numbers use shortest round-trip decimals.
std::string serialize_system(const LinearSystem& sys);

// Control file: one segment per line, "duration value_1 ... value_m",
// '#' starts a comment. All durations must be strictly positive and every
// line must carry the same number of values.
PiecewiseConstantControl parse_control(std::string_view text);

// One segment per line; header is emitted as '#' comment lines when given.
std::string serialize_control(const PiecewiseConstantControl& control,
                              const std::string& header = "");

// Shortest decimal that parses back to exactly the same double.
std::string format_shortest(double value);

// Fixed 17 significant digit form used by reports.
std::string format_report(double value);

}  // namespace ctrlcert
