#pragma once

#include <stdexcept>
#include <string>

namespace signphon {

// Base of every exception thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (XML, JSON, annotation rows, CSV).
struct ParseError : Error {
  using Error::Error;
};

// Structurally valid input with the wrong shape (array lengths, column counts).
struct FormatError : Error {
  using Error::Error;
};

// A computation could not be carried out on the given data.
struct DataError : Error {
  using Error::Error;
};

// Training diverged or was configured inconsistently.
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace signphon
