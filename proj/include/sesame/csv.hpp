/*
 *  Copyright (C) 2026 The Sesame Toolkit Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>
#include <vector>

namespace sesame {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Split a plain comma-separated line (no quoting; ids never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

/// Parse a double, raising ParseError naming `line` and `field` on failure.
double parse_double(const std::string& text, std::size_t line, const std::string& field);

}  // namespace sesame
