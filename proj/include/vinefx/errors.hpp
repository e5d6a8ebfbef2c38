#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vinefx {

/// Base of every error raised by the library. Callers that only care about
/// "something in vinefx failed" catch this.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// marginals
class DegenerateSample : public Error
{
public:
  using Error::Error;
};

class EmptyPanel : public Error
{
public:
  EmptyPanel() : Error("panel has no columns or no rows") {}
};

// bicop / rvine
class InvalidParameter : public Error
{
public:
  using Error::Error;
};

class NonConvergence : public Error
{
public:
  using Error::Error;
};

class LengthMismatch : public Error
{
public:
  using Error::Error;
};

class FitFailure : public Error
{
public:
  using Error::Error;
};

// scenarios / model
class MissingRateSeries : public Error
{
public:
  explicit MissingRateSeries(std::string currency)
    : Error("missing interest-rate series rate." + currency)
    , currency_(std::move(currency))
  {}
  const std::string& currency() const { return currency_; }

private:
  std::string currency_;
};

class CovarianceFailure : public Error
{
public:
  using Error::Error;
};

class DimensionMismatch : public Error
{
public:
  using Error::Error;
};

class EmptyScenarios : public Error
{
public:
  EmptyScenarios() : Error("scenario set is empty") {}
};

class MissingColumn : public Error
{
public:
  explicit MissingColumn(std::string column)
    : Error("missing column '" + column + "'")
    , column_(std::move(column))
  {}
  const std::string& column() const { return column_; }

private:
  std::string column_;
};

// harness
class ParseError : public Error
{
public:
  ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what)
    , line_(line)
  {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class NonNumericCell : public ParseError
{
public:
  NonNumericCell(std::size_t line, const std::string& column, const std::string& cell)
    : ParseError(line, "non-numeric cell '" + cell + "' in column '" + column + "'")
  {}
};

/// Invalid user configuration; `key()` names the offending entry.
class ConfigError : public Error
{
public:
  ConfigError(std::string key, const std::string& what)
    : Error("config key '" + key + "': " + what)
    , key_(std::move(key))
  {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

} // namespace vinefx
