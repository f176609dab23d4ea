#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tvsemi/error.hpp"
#include "tvsemi/harness.hpp"

namespace tvsemi {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": malformed number '" + std::string(s) + "'");
  }
  return v;
}

/// Parses "x1_3" into 3 for prefix "x1_"; 0 when the name does not match.
Index column_index(std::string_view name, std::string_view prefix) {
  if (name.substr(0, prefix.size()) != prefix) return 0;
  const auto digits = name.substr(prefix.size());
  Index k = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty() || k < 1) return 0;
  return k;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

void append_number(std::string& s, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

}  // namespace

Dataset<double> parse_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      const auto line = rest.substr(0, nl);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) fail(ErrorCode::SchemaError, "file has no header row");

  const auto header = split(lines[first]);
  Index y_col = -1;
  std::map<Index, Index> x1_cols, x2_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = header[c];
    const auto col = static_cast<Index>(c);
    if (name == "y") {
      if (y_col >= 0) fail(ErrorCode::SchemaError, "duplicate column y");
      y_col = col;
    } else if (const Index k1 = column_index(name, "x1_"); k1 > 0) {
      if (!x1_cols.emplace(k1, col).second) fail(ErrorCode::SchemaError, "duplicate column " + std::string(name));
    } else if (const Index k2 = column_index(name, "x2_"); k2 > 0) {
      if (!x2_cols.emplace(k2, col).second) fail(ErrorCode::SchemaError, "duplicate column " + std::string(name));
    } else {
      fail(ErrorCode::SchemaError, "unexpected column '" + std::string(name) + "'");
    }
  }
  if (y_col < 0) fail(ErrorCode::SchemaError, "missing column y");
  if (x1_cols.empty()) fail(ErrorCode::SchemaError, "no x1_* columns");
  const auto check_contiguous = [](const std::map<Index, Index>& cols, const char* prefix) {
    Index expect = 1;
    for (const auto& [k, c] : cols) {
      if (k != expect++) fail(ErrorCode::SchemaError, std::string(prefix) + "* columns are not numbered 1..p");
    }
  };
  check_contiguous(x1_cols, "x1_");
  check_contiguous(x2_cols, "x2_");

  std::vector<std::vector<double>> rows;
  for (std::size_t l = first + 1; l < lines.size(); ++l) {
    if (trim(lines[l]).empty()) continue;
    const auto fields = split(lines[l]);
    if (fields.size() != header.size()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(l + 1) + ": expected " +
                                      std::to_string(header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto f : fields) row.push_back(parse_number(f, l + 1));
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Index>(rows.size());
  Dataset<double> d;
  d.y.resize(n);
  d.x1.resize(n, static_cast<Index>(x1_cols.size()));
  d.x2.resize(n, static_cast<Index>(x2_cols.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.y(i) = r[static_cast<std::size_t>(y_col)];
    for (const auto& [k, c] : x1_cols) d.x1(i, k - 1) = r[static_cast<std::size_t>(c)];
    for (const auto& [k, c] : x2_cols) d.x2(i, k - 1) = r[static_cast<std::size_t>(c)];
  }
  return d;
}

Dataset<double> load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string format_csv(const Dataset<double>& d) {
  std::string s = "y";
  for (Index k = 1; k <= d.p1(); ++k) s += ",x1_" + std::to_string(k);
  for (Index k = 1; k <= d.p2(); ++k) s += ",x2_" + std::to_string(k);
  s += '\n';
  for (Index i = 0; i < d.n(); ++i) {
    append_number(s, d.y(i));
    for (Index k = 0; k < d.p1(); ++k) {
      s += ',';
      append_number(s, d.x1(i, k));
    }
    for (Index k = 0; k < d.p2(); ++k) {
      s += ',';
      append_number(s, d.x2(i, k));
    }
    s += '\n';
  }
  return s;
}

void save_csv(const std::filesystem::path& path, const Dataset<double>& d) { write_file(path, format_csv(d)); }

Vector<double> load_vector(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t l = 0;
  while (std::getline(in, line)) {
    ++l;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (values.empty() && l == 1 && !(std::isdigit(static_cast<unsigned char>(t.front())) || t.front() == '-' ||
                                      t.front() == '+' || t.front() == '.')) {
      continue;  // header
    }
    values.push_back(parse_number(t, l));
  }
  return Eigen::Map<Vector<double>>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace tvsemi
