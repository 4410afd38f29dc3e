#ifndef SPCONF_ERRORS_HPP
#define SPCONF_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace spconf {

/// Bad argument or configuration value.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A requested frequency band exceeds what the grid can resolve.
class AliasingError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

/// Base of every statistical-degeneracy failure: the quantity asked for
/// is not identified by the data or the population model.
class DegeneracyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A design matrix is (numerically) rank deficient.
class CollinearityError : public DegeneracyError {
public:
  CollinearityError(const std::string& what, std::vector<std::string> columns,
                    double rcond)
      : DegeneracyError(what), columns_(std::move(columns)), rcond_(rcond) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  double rcond() const noexcept { return rcond_; }

private:
  std::vector<std::string> columns_;
  double rcond_;
};

/// The spatially residualized exposure vanished: the exposure is fully spatial.
class DegenerateResidualError : public DegeneracyError {
public:
  using DegeneracyError::DegeneracyError;
};

/// The exposure has zero variance.
class DegenerateExposureError : public DegeneracyError {
public:
  using DegeneracyError::DegeneracyError;
};

/// A population projection coefficient is not defined (singular conditioning).
class EstimandUndefinedError : public DegeneracyError {
public:
  using DegeneracyError::DegeneracyError;
};

} // namespace spconf

#endif // SPCONF_ERRORS_HPP
