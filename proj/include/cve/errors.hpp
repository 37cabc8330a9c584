#pragma once

#include <stdexcept>
#include <string>

namespace cve {

// Precondition violations: bad dimensions, shape mismatches, out-of-range knobs.
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

// Every kernel value in a slice underflowed to zero. Signals a bandwidth
// that is far too small for the data; carries the offending shift index
// (-1 when the shift point is not one of the data points).
class DegenerateSlice : public std::runtime_error {
public:
    explicit DegenerateSlice(long shift_index)
        : std::runtime_error("all kernel values underflowed in slice"
                             + (shift_index >= 0 ? " at shift index " + std::to_string(shift_index)
                                                 : std::string())),
          shift(shift_index) {}
    long shift;
};

// Data without usable variation (e.g. all predictor columns constant).
class DegenerateData : public std::runtime_error {
public:
    explicit DegenerateData(const std::string& what) : std::runtime_error(what) {}
};

// Analytic gradients exist for the Gaussian kernel only.
class UnsupportedKernel : public std::runtime_error {
public:
    explicit UnsupportedKernel(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cve
