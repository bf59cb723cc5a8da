#include "stochdyn/csv.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "stochdyn/error.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(std::istream& in, const std::string& source_name) {
  CsvTable table;
  table.source = source_name;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t, ',');
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      table.rows.push_back({lineno, std::move(fields)});
    }
  }
  if (!have_header) throw Error(ErrorCode::parse, source_name + ": missing header line");
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return read_csv(in, path.string());
}

double parse_real(const std::string& field, const std::string& source, std::size_t line) {
  const std::string f = trim(field);
  std::size_t consumed = 0;
  double value = 0.0;
  bool ok = !f.empty();
  if (ok) {
    try {
      value = std::stod(f, &consumed);
    } catch (const std::exception&) {
      ok = false;
    }
  }
  if (!ok || consumed != f.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::parse, source + ":" + std::to_string(line) +
                                      ": invalid number '" + f + "'");
  }
  return value;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& f : split(text, ',')) out.push_back(parse_real(f, "argument", 0));
  return out;
}

namespace {

bool is_missing(const std::string& f) {
  return f.empty() || f == "-" || f == "\xE2\x80\x94" || f == "\xE2\x80\x93" || f == "NA" ||
         f == "nan" || f == "NaN";
}

}  // namespace

LabelledMatrix parse_labelled_matrix(std::istream& in, const std::string& source_name) {
  const CsvTable table = read_csv(in, source_name);
  if (table.header.size() < 2)
    throw Error(ErrorCode::parse, source_name + ": matrix needs a label column and data columns");
  LabelledMatrix m;
  m.column_labels.assign(table.header.begin() + 1, table.header.end());
  const auto ncols = static_cast<Eigen::Index>(m.column_labels.size());
  m.values.resize(static_cast<Eigen::Index>(table.rows.size()), ncols);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (static_cast<Eigen::Index>(row.fields.size()) != ncols + 1)
      throw Error(ErrorCode::parse, source_name + ":" + std::to_string(row.line) +
                                        ": expected " + std::to_string(ncols + 1) + " fields");
    m.row_labels.push_back(row.fields[0]);
    for (Eigen::Index c = 0; c < ncols; ++c) {
      const auto& f = row.fields[static_cast<std::size_t>(c) + 1];
      m.values(static_cast<Eigen::Index>(r), c) =
          is_missing(f) ? std::nan("") : parse_real(f, source_name, row.line);
    }
  }
  return m;
}

LabelledMatrix read_labelled_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse_labelled_matrix(in, path.string());
}

void write_labelled_matrix(std::ostream& out, const LabelledMatrix& m, const std::string& corner) {
  out << corner;
  for (const auto& c : m.column_labels) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out << m.row_labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      out << ',';
      if (!std::isnan(m.values(r, c))) out << format_double(m.values(r, c));
    }
    out << '\n';
  }
}

}  // namespace stochdyn
