#pragma once

#include <stdexcept>
#include <string>

namespace hbf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CodebookError : Error {
    using Error::Error;
};
struct PointOutsideCell : Error {
    using Error::Error;
};
struct EmptyPopulation : Error {
    using Error::Error;
};
struct NonPositiveRate : Error {
    using Error::Error;
};
struct Unstable : Error {
    using Error::Error;
};
struct NotALine : Error {
    using Error::Error;
};
struct MtOverload : Error {
    using Error::Error;
};
struct Inadmissible : Error {
    using Error::Error;
};
struct TooLarge : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

} // namespace hbf
