#include "mfc/table_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfc/error.hpp"

namespace mfc {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

std::optional<std::string> metadata_value(const Metadata& meta, const std::string& key) {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return std::nullopt;
}

namespace {

template <class T, class Fmt>
void write_grid_table(std::ostream& out, const SimplexGrid& grid, std::size_t columns,
                      std::span<const T> values, Metadata meta, const char* prefix, Fmt fmt) {
  if (values.size() != grid.size() * columns) {
    fail(ErrorKind::DimensionMismatch, "table size does not match grid x columns");
  }
  meta.emplace_back("dimension", std::to_string(grid.dimension()));
  meta.emplace_back("resolution", std::to_string(grid.resolution()));
  meta.emplace_back("columns", std::to_string(columns));
  write_metadata(out, meta);
  out << "point";
  for (std::size_t c = 0; c < grid.dimension(); ++c) out << ",c_" << c;
  for (std::size_t j = 0; j < columns; ++j) out << ',' << prefix << '_' << j;
  out << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << i;
    for (std::uint32_t c : grid.counts(i)) out << ',' << c;
    for (std::size_t j = 0; j < columns; ++j) out << ',' << fmt(values[i * columns + j]);
    out << '\n';
  }
}

std::size_t parse_size(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorKind::IoError, "line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorKind::IoError, "line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void write_q_table(std::ostream& out, const SimplexGrid& grid, std::size_t num_profiles,
                   std::span<const double> values, const Metadata& meta) {
  write_grid_table(out, grid, num_profiles, values, meta, "q", format_double);
}

void write_count_table(std::ostream& out, const SimplexGrid& grid, std::size_t num_profiles,
                       std::span<const std::uint64_t> counts, const Metadata& meta) {
  write_grid_table(out, grid, num_profiles, counts, meta, "n",
                   [](std::uint64_t n) { return std::to_string(n); });
}

void write_value_table(std::ostream& out, const SimplexGrid& grid, const ValueTable& v,
                       const Metadata& meta) {
  write_grid_table(out, grid, 1, std::span<const double>(v.values), meta, "v", format_double);
}

ExactQTable LoadedTable::as_q_table() const {
  ExactQTable q;
  q.num_points = grid.size();
  q.num_profiles = columns;
  q.values = values;
  return q;
}

LoadedTable read_table(std::istream& in) {
  Metadata meta;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail(ErrorKind::IoError, "line " + std::to_string(lineno) + ": metadata without '='");
      }
      meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back(split(line));
    row_lines.push_back(lineno);
  }
  auto need = [&](const char* key) {
    const auto v = metadata_value(meta, key);
    if (!v) fail(ErrorKind::IoError, std::string("table metadata lacks '") + key + "'");
    return parse_size(*v, 0);
  };
  const std::size_t dim = need("dimension");
  const std::size_t res = need("resolution");
  const std::size_t columns = need("columns");
  LoadedTable t{SimplexGrid(dim, res), columns, {}, meta};
  if (rows.size() != t.grid.size()) {
    fail(ErrorKind::IoError, "table has " + std::to_string(rows.size()) + " rows, grid has " +
                                 std::to_string(t.grid.size()));
  }
  t.values.reserve(rows.size() * columns);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::size_t ln = row_lines[i];
    if (r.size() != 1 + dim + columns) {
      fail(ErrorKind::IoError, "line " + std::to_string(ln) + ": expected " +
                                   std::to_string(1 + dim + columns) + " fields");
    }
    if (parse_size(r[0], ln) != i) {
      fail(ErrorKind::IoError, "line " + std::to_string(ln) + ": point index out of order");
    }
    const auto counts = t.grid.counts(i);
    for (std::size_t c = 0; c < dim; ++c) {
      if (parse_size(r[1 + c], ln) != counts[c]) {
        fail(ErrorKind::GridMismatch, "line " + std::to_string(ln) + ": composition differs from grid");
      }
    }
    for (std::size_t j = 0; j < columns; ++j) t.values.push_back(parse_double(r[1 + dim + j], ln));
  }
  return t;
}

LoadedTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path + "'");
  return read_table(in);
}

}  // namespace mfc
