/*
 * Copyright (c) 2026, The datum-guard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DATUM_ERROR_HPP
#define DATUM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace datum {

enum class ErrorCode {
    MalformedXml,
    DuplicateMessageId,
    UnresolvedInclude,
    UnknownFieldType,
    IoFailure,
    PayloadTooLong,
    FieldOutOfRange,
    MissingField,
    IllFormedProtocol,
    ParseError,
    ConfigError,
    BindFailure,
    TraceParseError,
    InvalidParams,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::DuplicateMessageId: return "DuplicateMessageId";
    case ErrorCode::UnresolvedInclude: return "UnresolvedInclude";
    case ErrorCode::UnknownFieldType: return "UnknownFieldType";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::PayloadTooLong: return "PayloadTooLong";
    case ErrorCode::FieldOutOfRange: return "FieldOutOfRange";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::IllFormedProtocol: return "IllFormedProtocol";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::TraceParseError: return "TraceParseError";
    case ErrorCode::InvalidParams: return "InvalidParams";
    }
    return "Unknown";
}

/// Every recoverable failure raised by the toolkit carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace datum

#endif // DATUM_ERROR_HPP
