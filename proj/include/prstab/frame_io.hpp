#pragma once

#include <string>
#include <string_view>

#include "prstab/frame.hpp"

namespace prstab {

/// CSV: n lines of m comma-separated numbers (row i holds coordinate i of
/// every column). Blank lines and lines starting with '#' are skipped.
/// Errors name `source` and the line number.
Frame parse_frame_csv(std::string_view text, const std::string& source);

/// JSON: {"dim": n, "count": m, "columns": [[...], ...]}.
Frame parse_frame_json(std::string_view text, const std::string& source);

/// Chooses the parser by extension (.json, otherwise CSV).
Frame read_frame(const std::string& path);

std::string frame_to_csv(const Frame& f);
std::string frame_to_json(const Frame& f);

/// Comma-separated numbers, e.g. "1,0.5,-2". `what` names the flag in errors.
Vector parse_vector(std::string_view text, const std::string& what);

}  // namespace prstab
