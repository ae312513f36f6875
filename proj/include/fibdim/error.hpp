#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fibdim {

enum class ErrorKind {
  DegenerateBasis,
  DimensionMismatch,
  ZeroVector,
  InvalidSpec,
  InvalidArgument,
  GapTooSmall,
  DegenerateFiberPair,
  IntervalWrap,
  InsufficientMass,
  BandwidthTooSmall,
  NoAcceptedReplicas,
  AtomicFibers,
  HypothesisNotMet,
  AbsolutelyContinuousViolation,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // True for refusals caused by a violated mathematical hypothesis rather than
  // a bad input or a numerical failure.
  bool is_hypothesis_gate() const noexcept {
    return kind_ == ErrorKind::GapTooSmall || kind_ == ErrorKind::AtomicFibers ||
           kind_ == ErrorKind::HypothesisNotMet ||
           kind_ == ErrorKind::NoAcceptedReplicas;
  }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateBasis: return "DegenerateBasis";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::GapTooSmall: return "GapTooSmall";
    case ErrorKind::DegenerateFiberPair: return "DegenerateFiberPair";
    case ErrorKind::IntervalWrap: return "IntervalWrap";
    case ErrorKind::InsufficientMass: return "InsufficientMass";
    case ErrorKind::BandwidthTooSmall: return "BandwidthTooSmall";
    case ErrorKind::NoAcceptedReplicas: return "NoAcceptedReplicas";
    case ErrorKind::AtomicFibers: return "AtomicFibers";
    case ErrorKind::HypothesisNotMet: return "HypothesisNotMet";
    case ErrorKind::AbsolutelyContinuousViolation: return "AbsolutelyContinuousViolation";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace fibdim
