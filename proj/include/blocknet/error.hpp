#pragma once

#include <stdexcept>
#include <string>

namespace blocknet {

/// Base class for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidData : public Error {
 public:
  using Error::Error;
};

/// A variable with zero variance cannot be standardized.
class ConstantColumn : public InvalidData {
 public:
  ConstantColumn(int column, std::string name)
      : InvalidData("column " + std::to_string(column) + " ('" + name +
                    "') is constant"),
        column_(column),
        name_(std::move(name)) {}
  int column() const noexcept { return column_; }
  const std::string& name() const noexcept { return name_; }

 private:
  int column_;
  std::string name_;
};

/// The MLE covariance of a block is not positive definite.
class SingularBlock : public Error {
 public:
  SingularBlock(int block, int block_size)
      : Error("block " + std::to_string(block) + " of size " +
              std::to_string(block_size) + " has a singular covariance"),
        block_(block) {}
  int block() const noexcept { return block_; }

 private:
  int block_;
};

class EmptyCandidateSet : public Error {
 public:
  using Error::Error;
};

class DegeneratePath : public Error {
 public:
  using Error::Error;
};

class InsufficientComplexModels : public Error {
 public:
  using Error::Error;
};

class SingularInput : public Error {
 public:
  using Error::Error;
};

}  // namespace blocknet
