#pragma once

#include <stdexcept>

namespace renal {

// Error taxonomy used across the pipeline. The CLI maps config_error and
// validation failures raised while parsing configuration to exit code 2;
// everything else that escapes is a runtime failure (exit code 1).

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct geometry_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct classification_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct protocol_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct calibration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace renal
