#pragma once

#include <stdexcept>
#include <string>

namespace nli {

// Malformed or inconsistent input data: lexicon, sentences, corpus files,
// checkpoints, out-of-vocabulary tokens.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class LexiconError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid dimensions or non-finite values during training/evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nli
