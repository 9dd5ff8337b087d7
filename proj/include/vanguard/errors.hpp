#pragma once

#include <stdexcept>
#include <string>

namespace vanguard {

/// Error categories raised by the library. Parser-level problems
/// (checksum, unknown opcode) are reported in-band and never throw.
enum class Err {
  OutOfRange,
  ReadOnlyRegister,
  ReservedAddress,
  InvalidRangeCode,
  ReservedBitSet,
  AddressOverrun,
  LengthMismatch,
  InvalidField,
  StepTooLarge,
  LevelsNotCrossed,
  TooShort,
  RateInfeasible,
  ProgramTooLarge,
  InvalidProgram,
  PortUnavailable,
  Timeout,
  BackendUnavailable,
  EventOutOfOrder,
  ConfigError,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::OutOfRange: return "OutOfRange";
    case Err::ReadOnlyRegister: return "ReadOnlyRegister";
    case Err::ReservedAddress: return "ReservedAddress";
    case Err::InvalidRangeCode: return "InvalidRangeCode";
    case Err::ReservedBitSet: return "ReservedBitSet";
    case Err::AddressOverrun: return "AddressOverrun";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::InvalidField: return "InvalidField";
    case Err::StepTooLarge: return "StepTooLarge";
    case Err::LevelsNotCrossed: return "LevelsNotCrossed";
    case Err::TooShort: return "TooShort";
    case Err::RateInfeasible: return "RateInfeasible";
    case Err::ProgramTooLarge: return "ProgramTooLarge";
    case Err::InvalidProgram: return "InvalidProgram";
    case Err::PortUnavailable: return "PortUnavailable";
    case Err::Timeout: return "Timeout";
    case Err::BackendUnavailable: return "BackendUnavailable";
    case Err::EventOutOfOrder: return "EventOutOfOrder";
    case Err::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}

  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

}  // namespace vanguard
