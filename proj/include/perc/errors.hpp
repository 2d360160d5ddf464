#pragma once

#include <stdexcept>
#include <string>

namespace perc {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate a documented precondition.
// The CLI maps these to exit code 2.
struct usage_error : error {
    using error::error;
};

// Input data (files, clouds, spectra) is malformed or inconsistent.
// The CLI maps these to exit code 3.
struct data_error : error {
    using error::error;
};

// Filesystem / stream failure while reading or writing.
struct io_error : data_error {
    using data_error::data_error;
};

} // namespace perc
