#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hgc/agents.hpp"
#include "hgc/claims.hpp"
#include "hgc/error.hpp"

namespace hgc {

struct ExternalEndpoint {
  std::string url;  // http://host[:port][/path]
  std::chrono::milliseconds deadline{30000};
  unsigned retries = 0;

  friend bool operator==(const ExternalEndpoint&, const ExternalEndpoint&) = default;
};

struct ExternalRequest {
  std::string query;
  int round = 0;
  std::optional<std::string> own_previous;
  std::vector<PromptPeer> peer_answers;
};

inline nlohmann::json to_json(const ExternalRequest& req) {
  nlohmann::json peers = nlohmann::json::array();
  for (const auto& p : req.peer_answers) peers.push_back({{"label", p.label}, {"text", p.text}});
  return {{"query", req.query},
          {"round", req.round},
          {"own_previous", req.own_previous ? nlohmann::json(*req.own_previous) : nlohmann::json(nullptr)},
          {"peer_answers", std::move(peers)}};
}

// Either the agent's answer or the reason it is offline this round.
using ExternalReply = std::variant<Answer, ErrorCode>;

struct ParsedUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

inline ParsedUrl parse_url(const std::string& url) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw Error(ErrorCode::InvalidArgument, "only http:// endpoints are supported: " + url);
  std::string rest = url.substr(scheme.size());
  ParsedUrl out;
  const auto slash = rest.find('/');
  if (slash != std::string::npos) {
    out.path = rest.substr(slash);
    rest = rest.substr(0, slash);
  }
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos) {
    try {
      out.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad port in " + url);
    }
    rest = rest.substr(0, colon);
  }
  if (rest.empty()) throw Error(ErrorCode::InvalidArgument, "missing host in " + url);
  out.host = rest;
  return out;
}

// Reply body must be {"text": string}.
inline ExternalReply parse_external_reply(const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return ErrorCode::MalformedReply;
  const auto it = doc.find("text");
  if (it == doc.end() || !it->is_string()) return ErrorCode::MalformedReply;
  return Answer::free_text(it->get<std::string>());
}

// POSTs the request to the endpoint, retrying up to `retries` extra times on
// transport errors and timeouts. Never throws for network conditions; a
// malformed reply is not retried.
inline ExternalReply external_answer(const ExternalEndpoint& endpoint, const ExternalRequest& request) {
  const ParsedUrl url = parse_url(endpoint.url);
  const std::string body = to_json(request).dump();
  ErrorCode last = ErrorCode::TransportFailure;
  for (unsigned attempt = 0; attempt <= endpoint.retries; ++attempt) {
    httplib::Client client(url.host, url.port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.deadline);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.deadline - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(url.path, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (res) {
      if (res->status != 200) return ErrorCode::MalformedReply;
      return parse_external_reply(res->body);
    }
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed + std::chrono::milliseconds(20) >= endpoint.deadline)) {
      last = ErrorCode::Timeout;
    } else {
      last = ErrorCode::TransportFailure;
    }
  }
  return last;
}

}  // namespace hgc
