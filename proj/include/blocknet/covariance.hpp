#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace blocknet {

/// n observations (rows) of p variables (columns), with one label per column.
class DataMatrix {
 public:
  /// Throws InvalidData unless n >= 1, p >= 1 and every entry is finite.
  /// Empty `names` are replaced by V1..Vp. Estimation routines further
  /// require n >= 2.
  explicit DataMatrix(Eigen::MatrixXd values, std::vector<std::string> names = {});

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Eigen::Index n() const noexcept { return values_.rows(); }
  Eigen::Index p() const noexcept { return values_.cols(); }

  /// Columns listed in `columns`, in that order.
  DataMatrix select_columns(const std::vector<int>& columns) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

/// Symmetric p x p covariance matrix.
class CovMatrix {
 public:
  /// Throws InvalidArgument if `values` is not square or not symmetric to 1e-12.
  explicit CovMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index p() const noexcept { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

  /// Principal sub-matrix on `indices`.
  CovMatrix submatrix(const std::vector<int>& indices) const;

  /// Largest off-diagonal |s_ij|; 0 when p == 1.
  double max_abs_offdiag() const;

 private:
  Eigen::MatrixXd values_;
};

/// Centers every column and scales it to unit MLE variance (divisor n).
/// Throws ConstantColumn for a column whose variance is <= 1e-12.
DataMatrix standardize(const DataMatrix& x);

/// S = X_c' X_c / n on column-centered data.
CovMatrix sample_covariance(const DataMatrix& x);

/// Reads a header row of variable names followed by numeric rows.
/// Missing or non-numeric cells are rejected with InvalidData.
DataMatrix read_csv(std::istream& in);
DataMatrix read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const DataMatrix& x);

}  // namespace blocknet
