#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nitrosep {

// Base of every error raised by the library. `kind()` is a stable
// machine-readable tag; the CLI prints it alongside what().
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// ---- core-matrix --------------------------------------------------------

class ZeroVarianceColumn : public Error {
 public:
  explicit ZeroVarianceColumn(std::size_t col)
      : Error("ZeroVarianceColumn", "column " + std::to_string(col) + " has zero variance"),
        col_(col) {}
  std::size_t column() const noexcept { return col_; }

 private:
  std::size_t col_;
};

class TooFewRows : public Error {
 public:
  TooFewRows(std::size_t have, std::size_t need)
      : Error("TooFewRows", "have " + std::to_string(have) + " rows, need at least " +
                                std::to_string(need)) {}
};

class NotSymmetric : public Error {
 public:
  NotSymmetric() : Error("NotSymmetric", "matrix is not symmetric within 1e-10") {}
};

class DidNotConverge : public Error {
 public:
  explicit DidNotConverge(std::size_t iterations)
      : Error("DidNotConverge", "no convergence after " + std::to_string(iterations) + " sweeps"),
        iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class NonFinite : public Error {
 public:
  NonFinite() : Error("NonFinite", "matrix contains NaN or Inf") {}
};

// ---- ingest -------------------------------------------------------------

class MalformedHeader : public Error {
 public:
  explicit MalformedHeader(const std::string& what) : Error("MalformedHeader", what) {}
};

class RaggedRow : public Error {
 public:
  explicit RaggedRow(std::size_t line)
      : Error("RaggedRow", "line " + std::to_string(line) + " has the wrong number of fields"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MalformedDate : public Error {
 public:
  MalformedDate(const std::string& text, std::size_t line)
      : Error("MalformedDate", "'" + text + "' on line " + std::to_string(line) +
                                   " is not an ISO date") {}
};

class DuplicateTimestampVariable : public Error {
 public:
  DuplicateTimestampVariable(const std::string& date, const std::string& code)
      : Error("DuplicateTimestampVariable", "variable " + code + " observed twice on " + date),
        date_(date),
        code_(code) {}
  const std::string& date() const noexcept { return date_; }
  const std::string& code() const noexcept { return code_; }

 private:
  std::string date_;
  std::string code_;
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(const std::string& code)
      : Error("UnknownVariable", "variable " + code + " not in table"), code_(code) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class EmptyResult : public Error {
 public:
  explicit EmptyResult(const std::string& what) : Error("EmptyResult", what) {}
};

class NetworkUnavailable : public Error {
 public:
  explicit NetworkUnavailable(const std::string& what) : Error("NetworkUnavailable", what) {}
};

class HttpStatus : public Error {
 public:
  explicit HttpStatus(int status)
      : Error("HttpStatus", "server answered " + std::to_string(status)), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class CacheWriteFailed : public Error {
 public:
  explicit CacheWriteFailed(const std::string& path)
      : Error("CacheWriteFailed", "cannot write " + path) {}
};

// ---- preprocess ---------------------------------------------------------

class NonConsecutiveYears : public Error {
 public:
  NonConsecutiveYears(int before, int after)
      : Error("NonConsecutiveYears",
              "gap between " + std::to_string(before) + " and " + std::to_string(after)) {}
};

class TooShort : public Error {
 public:
  explicit TooShort(const std::string& what) : Error("TooShort", what) {}
};

class MissingCell : public Error {
 public:
  MissingCell(int year, const std::string& code)
      : Error("MissingCell", "missing value for " + code + " in " + std::to_string(year)) {}
};

// ---- pca / ica / fa -----------------------------------------------------

class RuleInapplicable : public Error {
 public:
  explicit RuleInapplicable(const std::string& what) : Error("RuleInapplicable", what) {}
};

class OutOfRange : public Error {
 public:
  explicit OutOfRange(const std::string& what) : Error("OutOfRange", what) {}
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(std::size_t rank)
      : Error("RankDeficient", "effective rank is " + std::to_string(rank)), rank_(rank) {}
  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

class Singular : public Error {
 public:
  explicit Singular(const std::string& what) : Error("Singular", what) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& what) : Error("InvalidConfig", what) {}
};

class DofNegative : public Error {
 public:
  explicit DofNegative(std::size_t k)
      : Error("DofNegative", std::to_string(k) + " factors leave negative degrees of freedom"),
        k_(k) {}
  std::size_t factors() const noexcept { return k_; }

 private:
  std::size_t k_;
};

class SingularCorrelation : public Error {
 public:
  SingularCorrelation() : Error("SingularCorrelation", "correlation matrix is singular") {}
};

class NotConverged : public Error {
 public:
  explicit NotConverged(const std::string& what) : Error("NotConverged", what) {}
};

// ---- diagnostics / synth ------------------------------------------------

class ConstantSeries : public Error {
 public:
  ConstantSeries() : Error("ConstantSeries", "series has zero variance") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("LengthMismatch", std::to_string(a) + " vs " + std::to_string(b)) {}
};

class DegenerateRange : public Error {
 public:
  DegenerateRange() : Error("DegenerateRange", "all values identical; cannot bin") {}
};

class ConstantField : public Error {
 public:
  ConstantField() : Error("ConstantField", "field has zero variance") {}
};

class ConditioningFailed : public Error {
 public:
  explicit ConditioningFailed(std::size_t attempts)
      : Error("ConditioningFailed",
              "no mixing matrix met the condition bound in " + std::to_string(attempts) +
                  " draws") {}
};

}  // namespace nitrosep
