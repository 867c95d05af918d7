#include "prstab/frame_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prstab/error.hpp"
#include "prstab/json_out.hpp"

namespace prstab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(std::string_view tok, double& out) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && p == tok.data() + tok.size() && std::isfinite(out);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Frame parse_frame_csv(std::string_view text, const std::string& source) {
  std::vector<Vector> rows;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    Vector row;
    std::size_t field = 0;
    for (std::string_view tok : split(line, ',')) {
      ++field;
      double v = 0.0;
      if (!parse_number(tok, v)) {
        std::ostringstream os;
        os << source << ":" << line_no << ": field " << field << " is not a finite number: '" << trim(tok) << "'";
        throw InvalidArgument(os.str());
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream os;
      os << source << ":" << line_no << ": expected " << rows.front().size() << " values, found " << row.size();
      throw InvalidArgument(os.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(source + ": no frame rows found");
  return Frame(Matrix::from_rows(rows));
}

Frame parse_frame_json(std::string_view text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(source + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array())
    throw InvalidArgument(source + ": expected an object with a \"columns\" array");
  std::vector<Vector> cols;
  for (std::size_t c = 0; c < j["columns"].size(); ++c) {
    const auto& col = j["columns"][c];
    if (!col.is_array()) throw InvalidArgument(source + ": columns[" + std::to_string(c) + "] is not an array");
    Vector v;
    for (const auto& e : col) {
      if (!e.is_number()) throw InvalidArgument(source + ": columns[" + std::to_string(c) + "] holds a non-number");
      v.push_back(e.get<double>());
    }
    if (!cols.empty() && v.size() != cols.front().size())
      throw InvalidArgument(source + ": columns[" + std::to_string(c) + "] has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(cols.front().size()));
    cols.push_back(std::move(v));
  }
  if (cols.empty() || cols.front().empty()) throw InvalidArgument(source + ": frame has no columns");
  auto check = [&](const char* key, std::size_t expected) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned() || j[key].get<std::size_t>() != expected)
      throw InvalidArgument(source + ": \"" + key + "\" does not match the columns (expected " +
                            std::to_string(expected) + ")");
  };
  check("dim", cols.front().size());
  check("count", cols.size());
  return Frame::from_columns(cols);
}

Frame read_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(path + ": cannot open frame file");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? parse_frame_json(text, path) : parse_frame_csv(text, path);
}

std::string frame_to_csv(const Frame& f) {
  std::string out;
  for (std::size_t i = 0; i < f.dim(); ++i) {
    for (std::size_t j = 0; j < f.count(); ++j) {
      if (j) out += ',';
      out += format_double(f.column(j)[i]);
    }
    out += '\n';
  }
  return out;
}

std::string frame_to_json(const Frame& f) {
  Json j;
  j["dim"] = f.dim();
  j["count"] = f.count();
  Json cols = Json::array();
  for (std::size_t c = 0; c < f.count(); ++c) cols.push_back(to_json(f.column(c)));
  j["columns"] = cols;
  return dump_json(j);
}

Vector parse_vector(std::string_view text, const std::string& what) {
  Vector v;
  std::size_t field = 0;
  for (std::string_view tok : split(text, ',')) {
    ++field;
    double x = 0.0;
    if (!parse_number(tok, x))
      throw InvalidArgument(what + ": entry " + std::to_string(field) + " is not a finite number: '" +
                            std::string(trim(tok)) + "'");
    v.push_back(x);
  }
  return v;
}

}  // namespace prstab
