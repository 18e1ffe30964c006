#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mfc/table_io.hpp"
#include "test_support.hpp"

namespace mfc {
namespace {

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  for (double v : {1.0 / 3.0, std::exp(1.0), -1e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Metadata, WriteAndLookup) {
  const Metadata m{{"seed", "7"}, {"gamma", "0.5"}};
  std::ostringstream out;
  write_metadata(out, m);
  EXPECT_EQ(out.str(), "# seed=7\n# gamma=0.5\n");
  EXPECT_EQ(metadata_value(m, "gamma"), "0.5");
  EXPECT_FALSE(metadata_value(m, "kappa").has_value());
}

TEST(QTable, RoundTripIsExact) {
  const SimplexGrid grid(3, 4);
  Rng rng(0);
  std::normal_distribution<double> z;
  std::vector<double> v(grid.size() * 8);
  for (auto& x : v) x = z(rng);
  std::stringstream ss;
  write_q_table(ss, grid, 8, v, {{"seed", "0"}});
  const auto t = read_table(ss);
  EXPECT_EQ(t.grid.dimension(), 3u);
  EXPECT_EQ(t.grid.resolution(), 4u);
  EXPECT_EQ(t.columns, 8u);
  EXPECT_EQ(t.values, v);
  EXPECT_EQ(metadata_value(t.metadata, "seed"), "0");
  const auto q = t.as_q_table();
  EXPECT_EQ(q.num_points, grid.size());
  EXPECT_EQ(q.num_profiles, 8u);
}

TEST(Tables, CountsAndValues) {
  const SimplexGrid grid(2, 3);
  std::stringstream c;
  write_count_table(c, grid, 2, std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6, 7, 8}, {});
  const auto ct = read_table(c);
  EXPECT_EQ(ct.values, (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}));
  std::stringstream v;
  write_value_table(v, grid, ValueTable{{0.5, -1, 2, 4}}, {});
  EXPECT_NE(v.str().find("v_0"), std::string::npos);
  EXPECT_EQ(read_table(v).values, (std::vector<double>{0.5, -1, 2, 4}));
}

TEST(Tables, SameInputSameBytes) {
  const SimplexGrid grid(2, 5);
  std::vector<double> v(grid.size() * 4, 0.125);
  std::ostringstream a, b;
  write_q_table(a, grid, 4, v, {{"k", "v"}});
  write_q_table(b, grid, 4, v, {{"k", "v"}});
  EXPECT_EQ(a.str(), b.str());
}

TEST(Tables, MalformedInput) {
  const SimplexGrid grid(2, 2);
  std::ostringstream good;
  write_q_table(good, grid, 1, std::vector<double>{1, 2, 3}, {});
  std::string text = good.str();
  std::stringstream bad_number(text.substr(0, text.rfind(',') + 1) + "abc\n");
  EXPECT_MFC_ERROR(read_table(bad_number), ErrorKind::IoError);
  std::stringstream truncated(text.substr(0, text.rfind('\n', text.size() - 2) + 1));
  EXPECT_MFC_ERROR(read_table(truncated), ErrorKind::IoError);
  std::stringstream empty("");
  EXPECT_MFC_ERROR(read_table(empty), ErrorKind::IoError);
  EXPECT_MFC_ERROR(read_table(std::string("/nonexistent/table.csv")), ErrorKind::IoError);
}

}  // namespace
}  // namespace mfc
