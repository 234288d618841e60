#pragma once

#include <stdexcept>
#include <string>

namespace trusteval {

// Base for everything this library throws.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions.
struct validation_error : error {
    using error::error;
};

// File absent or unopenable.
struct file_missing_error : error {
    using error::error;
};

// File present but not decodable as the expected format (truncation, bad
// JSON, missing fields, out-of-range values).
struct file_corrupt_error : error {
    using error::error;
};

// Well-formed file whose format_version is not supported.
struct version_error : error {
    using error::error;
};

// Well-formed file whose matrix contents disagree with its declared
// dimensions, or dimensions that are not acceptable for a model.
struct shape_error : error {
    using error::error;
};

// Training aborted, e.g. a non-finite loss appeared.
struct training_error : error {
    using error::error;
};

} // namespace trusteval
