#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfc/dp_oracle.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

/// Ordered `# key=value` lines heading every CSV file.
using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

void write_metadata(std::ostream& out, const Metadata& meta);
std::optional<std::string> metadata_value(const Metadata& meta, const std::string& key);

/// Grid-indexed table: header `point,c_0..c_{d-1},<prefix>_0..` with the
/// integer composition of each point, then one column per profile.
void write_q_table(std::ostream& out, const SimplexGrid& grid, std::size_t num_profiles,
                   std::span<const double> values, const Metadata& meta);
void write_count_table(std::ostream& out, const SimplexGrid& grid, std::size_t num_profiles,
                       std::span<const std::uint64_t> counts, const Metadata& meta);
void write_value_table(std::ostream& out, const SimplexGrid& grid, const ValueTable& v,
                       const Metadata& meta);

struct LoadedTable {
  SimplexGrid grid;
  std::size_t columns = 0;
  std::vector<double> values;  // row-major |grid| x columns
  Metadata metadata;

  ExactQTable as_q_table() const;
};

/// Reads any table written above. Throws IoError with a line number on
/// malformed input.
LoadedTable read_table(std::istream& in);
LoadedTable read_table(const std::string& path);

}  // namespace mfc
