#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ismd/types.hpp"

namespace ismd {

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// Numeric CSV reader. Lines starting with '#' are returned through
/// `comments` (without the marker); blank lines are skipped. All data rows
/// must have the same number of fields.
Matrix read_csv_matrix(const std::string& path, std::vector<std::string>* comments = nullptr);

void write_csv_row(std::ostream& os, const Eigen::Ref<const Vector>& row);

}  // namespace ismd
