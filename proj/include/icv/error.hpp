#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icv {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    NoDataForSymbol,
    InsufficientHistory,
    InsufficientRefreshes,
    InvalidModel,
    InvalidNoiseCov,
    NotSymmetric,
    NotOrthonormal,
    DegenerateReturn,
    PairTooSparse,
    InvalidParams,
    DayPoolEmpty,
    StieltjesNoConverge,
    UnsupportedRatio,
    NotPD,
    DegenerateSignal,
    InsufficientMomentumHistory,
    LookAhead,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NoDataForSymbol: return "NoDataForSymbol";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::InsufficientRefreshes: return "InsufficientRefreshes";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidNoiseCov: return "InvalidNoiseCov";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::DegenerateReturn: return "DegenerateReturn";
    case ErrorCode::PairTooSparse: return "PairTooSparse";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DayPoolEmpty: return "DayPoolEmpty";
    case ErrorCode::StieltjesNoConverge: return "StieltjesNoConverge";
    case ErrorCode::UnsupportedRatio: return "UnsupportedRatio";
    case ErrorCode::NotPD: return "NotPD";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::InsufficientMomentumHistory: return "InsufficientMomentumHistory";
    case ErrorCode::LookAhead: return "LookAhead";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace icv
