#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stochdyn {

/// One data row of a delimited text file, with its 1-based source line.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Comma-separated table with a header line. Blank lines and lines whose first
/// non-space character is `#` are skipped.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Index of a header column, or -1 when absent.
  int column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in, const std::string& source_name);
CsvTable read_csv_file(const std::filesystem::path& path);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char delim);

/// Strict real parse: the whole field must be consumed and the value finite.
/// Throws a parse error naming the source and line on failure.
double parse_real(const std::string& field, const std::string& source, std::size_t line);

/// Comma-separated list of reals, e.g. "0,5,10,15".
std::vector<double> parse_real_list(const std::string& text);

/// Labelled matrix: a header row of column labels and one label column.
/// Cells may be missing ("", "-", U+2014, "NA"); missing cells are NaN.
struct LabelledMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  Eigen::MatrixXd values;
};

LabelledMatrix read_labelled_matrix(const std::filesystem::path& path);
LabelledMatrix parse_labelled_matrix(std::istream& in, const std::string& source_name);
void write_labelled_matrix(std::ostream& out, const LabelledMatrix& m,
                           const std::string& corner = "age");

}  // namespace stochdyn
