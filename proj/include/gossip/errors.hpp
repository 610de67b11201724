#pragma once

#include <stdexcept>
#include <string>

namespace gossip {

/// Invalid parameter or configuration value.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulation exceeded its configured center/event cap.
class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A query asked for a level the trajectory never reached.
class NotReachedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a mapping (e.g. negative rescaled time).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// File could not be opened, written or parsed; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gossip
