#include "stochdyn/region_io.hpp"

#include <fstream>
#include <ostream>

#include "stochdyn/csv.hpp"
#include "stochdyn/error.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

Region parse_region(std::istream& in, const std::string& source_name) {
  const CsvTable table = read_csv(in, source_name);
  const int cx = table.column("x");
  const int cy = table.column("y");
  if (cx < 0 || cy < 0) throw Error(ErrorCode::parse, source_name + ": region header must be x,y");
  Eigen::Matrix2Xd v(2, static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.fields.size() != table.header.size())
      throw Error(ErrorCode::parse, source_name + ":" + std::to_string(row.line) + ": wrong field count");
    v(0, static_cast<Eigen::Index>(i)) = parse_real(row.fields[static_cast<std::size_t>(cx)], source_name, row.line);
    v(1, static_cast<Eigen::Index>(i)) = parse_real(row.fields[static_cast<std::size_t>(cy)], source_name, row.line);
  }
  return Region(std::move(v));
}

Region load_region(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse_region(in, path.string());
}

void write_region(std::ostream& out, const Region& region) {
  out << "x,y\n";
  for (Eigen::Index i = 0; i < region.size(); ++i)
    out << format_double(region.vertices()(0, i)) << ',' << format_double(region.vertices()(1, i)) << '\n';
}

}  // namespace stochdyn
