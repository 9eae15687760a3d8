// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace siamct::csv {

/// Splits one line on commas, honouring double-quoted fields with ""
/// escapes. Trailing '\r' is dropped.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Shortest decimal form that round-trips the double.
std::string number(double v);

}  // namespace siamct::csv
