#pragma once

#include <filesystem>
#include <iosfwd>

#include "stochdyn/geometry.hpp"

namespace stochdyn {

/// Polygon vertices as CSV with header `x,y`, one vertex per row.
Region load_region(const std::filesystem::path& path);
Region parse_region(std::istream& in, const std::string& source_name);
void write_region(std::ostream& out, const Region& region);

}  // namespace stochdyn
