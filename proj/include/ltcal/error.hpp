/*
 * Copyright 2026 The ltcal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ltcal {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition or shape violation in a library call.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Raised by the trainers when a loss stops being finite.
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("config key '" + key + "': " + what), key_(std::move(key)), detail_(what) {}

    const std::string& key() const noexcept { return key_; }
    // The message without the key prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string key_;
    std::string detail_;
};

enum class FormatErrorKind {
    bad_magic,
    version_mismatch,
    truncated,
    malformed,
    io,
};

const char* to_string(FormatErrorKind kind) noexcept;

// Dataset / checkpoint decoding failure. `offset()` is the byte offset (binary
// formats) or 1-based line number (text formats) where decoding stopped.
class FormatError : public Error {
public:
    FormatError(FormatErrorKind kind, std::uint64_t offset, const std::string& what)
        : Error(std::string(to_string(kind)) + " at " + std::to_string(offset) + ": " + what),
          kind_(kind),
          offset_(offset) {}

    FormatErrorKind kind() const noexcept { return kind_; }
    std::uint64_t offset() const noexcept { return offset_; }

private:
    FormatErrorKind kind_;
    std::uint64_t offset_;
};

}  // namespace ltcal
