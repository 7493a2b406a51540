#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fusereg/corpus.hpp"
#include "fusereg/errors.hpp"
#include "fusereg/linalg.hpp"
#include "fusereg/numio.hpp"

namespace fusereg {

struct CsvTable {
  std::vector<std::string> columns;
  Matrix rows;  // one row per record, one column per header entry
};

inline std::vector<std::string> role_columns(const std::string& role, int dim) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) out.push_back(role + "_" + std::to_string(i));
  return out;
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (table.columns.empty()) throw data_error("write_csv: no columns");
  if (table.rows.rows() > 0 &&
      table.rows.cols() != static_cast<Eigen::Index>(table.columns.size()))
    throw data_error("write_csv: row width does not match header");
  std::ofstream out(path);
  if (!out) throw data_error("write_csv: cannot open " + path.string());
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i > 0) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.rows.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(table.rows(r, c));
    }
    out << '\n';
  }
  if (!out) throw data_error("write_csv: write failed for " + path.string());
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(current);
  return fields;
}

}  // namespace detail

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("read_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw data_error("read_csv: " + path.string() + " has no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvTable table;
  table.columns = detail::split_csv_line(line);
  for (const auto& name : table.columns)
    if (name.empty()) throw data_error("read_csv: empty column name in " + path.string());
  const std::size_t width = table.columns.size();

  std::vector<double> values;
  std::size_t nrows = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != width)
      throw data_error("read_csv: " + path.string() + " line " + std::to_string(lineno) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(width));
    for (const auto& f : fields)
      values.push_back(
          parse_double(f, path.string() + " line " + std::to_string(lineno)));
    ++nrows;
  }

  table.rows.resize(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < nrows; ++r)
    for (std::size_t c = 0; c < width; ++c)
      table.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          values[r * width + c];
  return table;
}

// Column layout of a data file: dimensions of each role present, in the
// fixed order x1, x2, y with zero-based consecutive indices.
struct RoleLayout {
  int x1 = 0, x2 = 0, y = 0;
};

inline RoleLayout role_layout(const CsvTable& table, const std::string& context) {
  RoleLayout layout;
  const std::vector<std::pair<std::string, int*>> roles{
      {"x1", &layout.x1}, {"x2", &layout.x2}, {"y", &layout.y}};
  std::size_t pos = 0;
  for (const auto& [role, dim] : roles) {
    const std::string prefix = role + "_";
    while (pos < table.columns.size() &&
           table.columns[pos] == prefix + std::to_string(*dim)) {
      ++*dim;
      ++pos;
    }
  }
  if (pos != table.columns.size())
    throw data_error(context + ": unexpected column '" + table.columns[pos] +
                     "' (expected x1_i, x2_i, y_i groups in order with consecutive indices)");
  if (layout.x1 + layout.x2 + layout.y == 0) throw data_error(context + ": no data columns");
  return layout;
}

inline Matrix role_block(const CsvTable& table, const RoleLayout& layout,
                         const std::string& role) {
  int offset = 0, dim = 0;
  if (role == "x1") {
    dim = layout.x1;
  } else if (role == "x2") {
    offset = layout.x1;
    dim = layout.x2;
  } else if (role == "y") {
    offset = layout.x1 + layout.x2;
    dim = layout.y;
  } else {
    throw data_error("role_block: unknown role " + role);
  }
  return table.rows.middleCols(offset, dim);
}

inline std::vector<LabeledPair> labeled_from_table(const CsvTable& table,
                                                   const std::string& x_role,
                                                   const std::string& context) {
  const RoleLayout layout = role_layout(table, context);
  const int xdim = x_role == "x1" ? layout.x1 : layout.x2;
  if (xdim == 0 || layout.y == 0)
    throw data_error(context + ": expected " + x_role + " and y columns");
  const Matrix x = role_block(table, layout, x_role);
  const Matrix y = role_block(table, layout, "y");
  std::vector<LabeledPair> out;
  out.reserve(static_cast<std::size_t>(table.rows.rows()));
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r)
    out.push_back({x.row(r).transpose(), y.row(r).transpose()});
  return out;
}

inline std::vector<UnlabeledPair> unlabeled_from_table(const CsvTable& table,
                                                       const std::string& context) {
  const RoleLayout layout = role_layout(table, context);
  if (layout.x1 == 0 || layout.x2 == 0)
    throw data_error(context + ": expected x1 and x2 columns");
  const Matrix x1 = role_block(table, layout, "x1");
  const Matrix x2 = role_block(table, layout, "x2");
  std::vector<UnlabeledPair> out;
  out.reserve(static_cast<std::size_t>(table.rows.rows()));
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r)
    out.push_back({x1.row(r).transpose(), x2.row(r).transpose()});
  return out;
}

inline std::vector<Atom> atoms_from_table(const CsvTable& table, const std::string& context) {
  const RoleLayout layout = role_layout(table, context);
  if (layout.y == 0) throw data_error(context + ": expected y columns");
  const Matrix x1 = role_block(table, layout, "x1");
  const Matrix x2 = role_block(table, layout, "x2");
  const Matrix y = role_block(table, layout, "y");
  std::vector<Atom> out;
  out.reserve(static_cast<std::size_t>(table.rows.rows()));
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r)
    out.push_back({x1.row(r).transpose(), x2.row(r).transpose(), y.row(r).transpose()});
  return out;
}

inline CsvTable table_from_labeled(const std::vector<LabeledPair>& samples,
                                   const std::string& x_role, int xdim, int ydim) {
  CsvTable t;
  t.columns = role_columns(x_role, xdim);
  const auto ycols = role_columns("y", ydim);
  t.columns.insert(t.columns.end(), ycols.begin(), ycols.end());
  t.rows.resize(static_cast<Eigen::Index>(samples.size()), xdim + ydim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    t.rows.row(static_cast<Eigen::Index>(i)).head(xdim) = samples[i].x.transpose();
    t.rows.row(static_cast<Eigen::Index>(i)).tail(ydim) = samples[i].y.transpose();
  }
  return t;
}

inline CsvTable table_from_unlabeled(const std::vector<UnlabeledPair>& pairs, int m1, int m2) {
  CsvTable t;
  t.columns = role_columns("x1", m1);
  const auto c2 = role_columns("x2", m2);
  t.columns.insert(t.columns.end(), c2.begin(), c2.end());
  t.rows.resize(static_cast<Eigen::Index>(pairs.size()), m1 + m2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    t.rows.row(static_cast<Eigen::Index>(i)).head(m1) = pairs[i].x1.transpose();
    t.rows.row(static_cast<Eigen::Index>(i)).tail(m2) = pairs[i].x2.transpose();
  }
  return t;
}

inline void write_corpus_csv(const std::filesystem::path& dir, const TrainingCorpus& corpus) {
  std::filesystem::create_directories(dir);
  const CorpusDims d = corpus.dims();
  write_csv(dir / "labeled1.csv", table_from_labeled(corpus.labeled1(), "x1", d.m1, d.n));
  write_csv(dir / "labeled2.csv", table_from_labeled(corpus.labeled2(), "x2", d.m2, d.n));
  write_csv(dir / "unlabeled.csv", table_from_unlabeled(corpus.unlabeled(), d.m1, d.m2));
}

inline TrainingCorpus read_corpus_csv(const std::filesystem::path& dir) {
  const CsvTable t1 = read_csv(dir / "labeled1.csv");
  const CsvTable t2 = read_csv(dir / "labeled2.csv");
  const CsvTable tu = read_csv(dir / "unlabeled.csv");
  const RoleLayout l1 = role_layout(t1, "labeled1.csv");
  const RoleLayout l2 = role_layout(t2, "labeled2.csv");
  const RoleLayout lu = role_layout(tu, "unlabeled.csv");
  if (l1.x1 == 0 || l1.y == 0) throw data_error("labeled1.csv: expected x1 and y columns");
  if (l2.x2 == 0 || l2.y == 0) throw data_error("labeled2.csv: expected x2 and y columns");
  if (lu.x1 == 0 || lu.x2 == 0) throw data_error("unlabeled.csv: expected x1 and x2 columns");
  if (l1.x1 != lu.x1) throw data_error("x1 dimension differs between labeled1.csv and unlabeled.csv");
  if (l2.x2 != lu.x2) throw data_error("x2 dimension differs between labeled2.csv and unlabeled.csv");
  if (l1.y != l2.y) throw data_error("y dimension differs between labeled1.csv and labeled2.csv");
  CorpusDims dims{lu.x1, lu.x2, l1.y};
  return TrainingCorpus(labeled_from_table(t1, "x1", "labeled1.csv"),
                        labeled_from_table(t2, "x2", "labeled2.csv"),
                        unlabeled_from_table(tu, "unlabeled.csv"), dims);
}

}  // namespace fusereg
