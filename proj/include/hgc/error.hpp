#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hgc {

enum class ErrorCode {
  EmptyList,
  UnknownParent,
  UnknownEvent,
  UnassignedParent,
  MissingGenesis,
  InvalidArgument,
  EmptyPeers,
  Timeout,
  MalformedReply,
  TransportFailure,
  TooFewAgents,
  AllAgentsOffline,
  MissingRound,
  NotEquivalent,
  UnclassifiedClaim,
  InvalidF,
  MalformedScenario,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyList: return "EMPTY_LIST";
    case ErrorCode::UnknownParent: return "UNKNOWN_PARENT";
    case ErrorCode::UnknownEvent: return "UNKNOWN_EVENT";
    case ErrorCode::UnassignedParent: return "UNASSIGNED_PARENT";
    case ErrorCode::MissingGenesis: return "MISSING_GENESIS";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::EmptyPeers: return "EMPTY_PEERS";
    case ErrorCode::Timeout: return "TIMEOUT";
    case ErrorCode::MalformedReply: return "MALFORMED_REPLY";
    case ErrorCode::TransportFailure: return "TRANSPORT_FAILURE";
    case ErrorCode::TooFewAgents: return "TOO_FEW_AGENTS";
    case ErrorCode::AllAgentsOffline: return "ALL_AGENTS_OFFLINE";
    case ErrorCode::MissingRound: return "MISSING_ROUND";
    case ErrorCode::NotEquivalent: return "NOT_EQUIVALENT";
    case ErrorCode::UnclassifiedClaim: return "UNCLASSIFIED_CLAIM";
    case ErrorCode::InvalidF: return "INVALID_F";
    case ErrorCode::MalformedScenario: return "MALFORMED_SCENARIO";
  }
  return "UNKNOWN";
}

// Every library failure carries one of the codes above so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hgc
