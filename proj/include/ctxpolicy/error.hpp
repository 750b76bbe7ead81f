#pragma once

#include <stdexcept>
#include <string>

namespace ctxpolicy {

/// Bad input or configuration supplied by the caller. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A failure in something outside the process (network, adapter). Maps to
/// CLI exit code 2.
class ExternalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AdapterError : public ExternalError {
public:
    AdapterError(const std::string& what, std::string payload = {})
        : ExternalError(payload.empty() ? what : what + ": " + payload),
          payload_(std::move(payload)) {}

    const std::string& payload() const noexcept { return payload_; }

private:
    std::string payload_;
};

enum class FetchFailure { Network, HttpStatus, Timeout, TooManyRedirects, BadUrl };

class FetchError : public ExternalError {
public:
    FetchError(FetchFailure kind, const std::string& what, int status = 0)
        : ExternalError(what), kind_(kind), status_(status) {}

    FetchFailure kind() const noexcept { return kind_; }
    int status() const noexcept { return status_; }

private:
    FetchFailure kind_;
    int status_;
};

/// Dataset validation failure with the offending file and a JSON-pointer-ish
/// location inside it.
class DatasetError : public InputError {
public:
    DatasetError(std::string file, std::string location, const std::string& msg)
        : InputError(file + (location.empty() ? "" : " [" + location + "]") + ": " + msg),
          file_(std::move(file)),
          location_(std::move(location)) {}

    const std::string& file() const noexcept { return file_; }
    const std::string& location() const noexcept { return location_; }

private:
    std::string file_;
    std::string location_;
};

}  // namespace ctxpolicy
