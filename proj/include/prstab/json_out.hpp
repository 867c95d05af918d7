#pragma once

#include <string>

#include <json.hpp>

#include "prstab/frame.hpp"

namespace prstab {

using Json = nlohmann::ordered_json;

/// printf("%.17g"); NaN and infinities become "null".
std::string format_double(double v);

/// Deterministic serialisation with every float at 17 significant digits.
/// Keys keep insertion order. Ends with a newline.
std::string dump_json(const Json& j);

Json to_json(std::span<const double> v);
/// Row by row.
Json to_json(const Matrix& m);

}  // namespace prstab
