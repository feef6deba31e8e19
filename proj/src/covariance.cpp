#include "blocknet/covariance.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "blocknet/error.hpp"
#include "format.hpp"

namespace blocknet {

DataMatrix::DataMatrix(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw InvalidData("data matrix needs at least one row and one column");
  if (!values_.allFinite()) throw InvalidData("data matrix contains non-finite entries");
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(values_.cols()));
    for (Eigen::Index j = 0; j < values_.cols(); ++j) names_.push_back("V" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
    throw InvalidData("expected " + std::to_string(values_.cols()) + " column names, got " +
                      std::to_string(names_.size()));
}

DataMatrix DataMatrix::select_columns(const std::vector<int>& columns) const {
  Eigen::MatrixXd sub(values_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> sub_names;
  sub_names.reserve(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] < 0 || columns[c] >= values_.cols())
      throw InvalidArgument("column index " + std::to_string(columns[c]) + " out of range");
    sub.col(static_cast<Eigen::Index>(c)) = values_.col(columns[c]);
    sub_names.push_back(names_[static_cast<std::size_t>(columns[c])]);
  }
  return DataMatrix(std::move(sub), std::move(sub_names));
}

CovMatrix::CovMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() < 1)
    throw InvalidArgument("covariance matrix must be square and non-empty");
  if (!values_.allFinite()) throw InvalidArgument("covariance matrix has non-finite entries");
  const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, values_.cwiseAbs().maxCoeff()))
    throw InvalidArgument("covariance matrix is not symmetric");
}

CovMatrix CovMatrix::submatrix(const std::vector<int>& indices) const {
  const auto m = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      sub(a, b) = values_(indices[static_cast<std::size_t>(a)], indices[static_cast<std::size_t>(b)]);
  return CovMatrix(std::move(sub));
}

double CovMatrix::max_abs_offdiag() const {
  double best = 0.0;
  for (Eigen::Index j = 0; j < p(); ++j)
    for (Eigen::Index i = j + 1; i < p(); ++i) best = std::max(best, std::abs(values_(i, j)));
  return best;
}

DataMatrix standardize(const DataMatrix& x) {
  if (x.n() < 2) throw InvalidData("standardization needs at least two observations");
  const double n = static_cast<double>(x.n());
  Eigen::MatrixXd out = x.values();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    col.array() -= col.mean();
    // second centering pass removes the rounding residue of the first
    col.array() -= col.mean();
    const double var = col.squaredNorm() / n;
    if (!(var > 1e-12)) throw ConstantColumn(static_cast<int>(j), x.names()[static_cast<std::size_t>(j)]);
    col /= std::sqrt(var);
  }
  return DataMatrix(std::move(out), x.names());
}

CovMatrix sample_covariance(const DataMatrix& x) {
  if (x.n() < 2) throw InvalidData("covariance needs at least two observations");
  const Eigen::MatrixXd centered = x.values().rowwise() - x.values().colwise().mean();
  Eigen::MatrixXd s = (centered.transpose() * centered) / static_cast<double>(x.n());
  // exact symmetry; the product is symmetric only up to rounding
  s = 0.5 * (s + s.transpose()).eval();
  return CovMatrix(std::move(s));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

DataMatrix read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidData("empty CSV input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> names = split_csv_line(line);
  for (auto& name : names) name = trim(name);

  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line) == "\r") continue;
    const auto row = split_csv_line(line);
    if (row.size() != names.size())
      throw InvalidData("row " + std::to_string(rows + 2) + " has " + std::to_string(row.size()) +
                        " cells, expected " + std::to_string(names.size()));
    for (std::size_t j = 0; j < row.size(); ++j) {
      const std::string cell = trim(row[j]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw InvalidData("row " + std::to_string(rows + 2) + ", column '" + names[j] +
                          "': not a finite number: '" + cell + "'");
      cells.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw InvalidData("CSV input has no observations");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * names.size() + j];
  return DataMatrix(std::move(values), std::move(names));
}

DataMatrix read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const DataMatrix& x) {
  for (std::size_t j = 0; j < x.names().size(); ++j) out << (j ? "," : "") << x.names()[j];
  out << '\n';
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    for (Eigen::Index j = 0; j < x.p(); ++j) out << (j ? "," : "") << detail::format_double(x.values()(i, j));
    out << '\n';
  }
}

}  // namespace blocknet
