#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sct {

enum class Errc {
  // input data
  RankDeficientDesign,
  InsufficientObservations,
  ShapeMismatch,
  MalformedHeader,
  NonNumericCell,
  EmptyGroup,
  // numerical degeneracy
  SingularGram,
  DegenerateScatter,
  DegreesOfFreedomTooSmall,
  // configuration / usage
  EmptyFamily,
  InvalidFamily,
  TooFewReplicates,
  UnboundedBox,
  NotUnivariate,
  NotTwoGroups,
  MetaMismatch,
  InvalidArgument,
};

constexpr std::string_view error_name(Errc code) {
  switch (code) {
    case Errc::RankDeficientDesign: return "RankDeficientDesign";
    case Errc::InsufficientObservations: return "InsufficientObservations";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::SingularGram: return "SingularGram";
    case Errc::DegenerateScatter: return "DegenerateScatter";
    case Errc::DegreesOfFreedomTooSmall: return "DegreesOfFreedomTooSmall";
    case Errc::EmptyFamily: return "EmptyFamily";
    case Errc::InvalidFamily: return "InvalidFamily";
    case Errc::TooFewReplicates: return "TooFewReplicates";
    case Errc::UnboundedBox: return "UnboundedBox";
    case Errc::NotUnivariate: return "NotUnivariate";
    case Errc::NotTwoGroups: return "NotTwoGroups";
    case Errc::MetaMismatch: return "MetaMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Process exit status for an error: 2 input, 3 numerical degeneracy, 4 config.
constexpr int exit_code(Errc code) {
  switch (code) {
    case Errc::RankDeficientDesign:
    case Errc::InsufficientObservations:
    case Errc::ShapeMismatch:
    case Errc::MalformedHeader:
    case Errc::NonNumericCell:
    case Errc::EmptyGroup:
      return 2;
    case Errc::SingularGram:
    case Errc::DegenerateScatter:
    case Errc::DegreesOfFreedomTooSmall:
      return 3;
    default:
      return 4;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sct
