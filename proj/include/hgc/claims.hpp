#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgc/error.hpp"

namespace hgc {

// An atomic assertion; support counting, adoption and dropping all happen per claim.
struct Claim {
  std::string id;
  std::string text;
  double confidence = 1.0;

  friend bool operator==(const Claim&, const Claim&) = default;
};

namespace detail {

constexpr bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
         (c >= 0x7b && c <= 0x7e);
}

constexpr bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

}  // namespace detail

// Lowercase ASCII letters, drop ASCII punctuation, collapse runs of ASCII
// whitespace into one space and trim. Bytes >= 0x80 pass through untouched.
inline std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (detail::is_ascii_punct(c)) continue;
    if (detail::is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
  }
  return out;
}

inline std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  const std::string norm = normalize(text);
  std::size_t start = 0;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    out.emplace(norm.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

// Jaccard similarity of the normalized token sets; two empty texts score 1.
inline double token_jaccard(std::string_view a, std::string_view b) {
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : ta) common += tb.count(t);
  const std::size_t uni = ta.size() + tb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

inline std::vector<Claim> sorted_by_id(std::vector<Claim> claims) {
  std::sort(claims.begin(), claims.end(),
            [](const Claim& a, const Claim& b) { return a.id < b.id; });
  return claims;
}

// Claims sorted by id, texts joined with ". ".
inline std::string render(std::vector<Claim> claims) {
  claims = sorted_by_id(std::move(claims));
  std::string out;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (i > 0) out += ". ";
    out += claims[i].text;
  }
  return out;
}

// An agent's output at one round. Claim-set answers keep their claims sorted by
// id and render deterministically; free-text answers (external agents) carry
// only the text. A claim-set answer with no claims is the abstain answer.
class Answer {
 public:
  Answer() = default;

  static Answer from_claims(std::vector<Claim> claims) {
    std::set<std::string> seen;
    for (const auto& c : claims) {
      if (c.id.empty()) throw Error(ErrorCode::InvalidArgument, "claim id is empty");
      if (!seen.insert(c.id).second)
        throw Error(ErrorCode::InvalidArgument, "duplicate claim id '" + c.id + "'");
      if (!(c.confidence >= 0.0 && c.confidence <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "confidence of '" + c.id + "' outside [0,1]");
      if (normalize(c.text).empty())
        throw Error(ErrorCode::InvalidArgument, "claim '" + c.id + "' has empty text");
    }
    Answer a;
    a.claims_ = sorted_by_id(std::move(claims));
    a.rendering_ = render(a.claims_);
    return a;
  }

  static Answer free_text(std::string text) {
    Answer a;
    a.free_text_ = true;
    a.rendering_ = std::move(text);
    return a;
  }

  static Answer abstain() { return Answer{}; }

  const std::vector<Claim>& claims() const noexcept { return claims_; }
  const std::string& rendering() const noexcept { return rendering_; }
  bool is_free_text() const noexcept { return free_text_; }
  bool is_abstain() const noexcept { return !free_text_ && claims_.empty(); }

  std::set<std::string> claim_ids() const {
    std::set<std::string> ids;
    for (const auto& c : claims_) ids.insert(c.id);
    return ids;
  }

  const Claim* find(std::string_view id) const {
    auto it = std::lower_bound(claims_.begin(), claims_.end(), id,
                               [](const Claim& c, std::string_view key) { return c.id < key; });
    return (it != claims_.end() && it->id == id) ? &*it : nullptr;
  }

  bool contains(std::string_view id) const { return find(id) != nullptr; }

  friend bool operator==(const Answer&, const Answer&) = default;

 private:
  std::vector<Claim> claims_;
  std::string rendering_;
  bool free_text_ = false;
};

// Inverse of render for claim-set answers: splits on ". " and resolves each
// piece by text against a catalogue. Texts that themselves contain ". " cannot
// be recovered this way.
inline Answer parse_rendering(std::string_view rendering, std::span<const Claim> catalogue) {
  std::vector<Claim> claims;
  std::size_t start = 0;
  while (start < rendering.size()) {
    std::size_t end = rendering.find(". ", start);
    if (end == std::string_view::npos) end = rendering.size();
    const std::string_view piece = rendering.substr(start, end - start);
    auto it = std::find_if(catalogue.begin(), catalogue.end(),
                           [&](const Claim& c) { return c.text == piece; });
    if (it == catalogue.end())
      throw Error(ErrorCode::InvalidArgument, "no claim with text '" + std::string(piece) + "'");
    claims.push_back(*it);
    start = end + 2;
  }
  return Answer::from_claims(std::move(claims));
}

enum class EquivalenceMode { Exact, Normalized, TokenJaccard, ClaimSet };

constexpr std::string_view to_string(EquivalenceMode mode) {
  switch (mode) {
    case EquivalenceMode::Exact: return "exact";
    case EquivalenceMode::Normalized: return "normalized";
    case EquivalenceMode::TokenJaccard: return "jaccard";
    case EquivalenceMode::ClaimSet: return "claims";
  }
  return "claims";
}

inline std::optional<EquivalenceMode> parse_equivalence_mode(std::string_view s) {
  for (auto m : {EquivalenceMode::Exact, EquivalenceMode::Normalized,
                 EquivalenceMode::TokenJaccard, EquivalenceMode::ClaimSet}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

struct EquivalencePolicy {
  EquivalenceMode mode = EquivalenceMode::ClaimSet;
  double jaccard_threshold = 0.9;

  friend bool operator==(const EquivalencePolicy&, const EquivalencePolicy&) = default;
};

inline void validate(const EquivalencePolicy& policy) {
  if (!(policy.jaccard_threshold > 0.0 && policy.jaccard_threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "jaccard threshold must lie in (0,1]");
}

// CLAIM_SET compares claim-id sets; when either side is free text there are no
// claims to compare, so it falls back to normalized text matching.
inline bool answers_equivalent(const Answer& a, const Answer& b, const EquivalencePolicy& policy) {
  switch (policy.mode) {
    case EquivalenceMode::Exact:
      return a.rendering() == b.rendering();
    case EquivalenceMode::Normalized:
      return normalize(a.rendering()) == normalize(b.rendering());
    case EquivalenceMode::TokenJaccard:
      return token_jaccard(a.rendering(), b.rendering()) >= policy.jaccard_threshold;
    case EquivalenceMode::ClaimSet:
      if (a.is_free_text() || b.is_free_text())
        return normalize(a.rendering()) == normalize(b.rendering());
      return a.claim_ids() == b.claim_ids();
  }
  return false;
}

inline bool all_equivalent(std::span<const Answer> answers, const EquivalencePolicy& policy) {
  if (answers.empty()) throw Error(ErrorCode::EmptyList, "no answers to compare");
  if (policy.mode == EquivalenceMode::TokenJaccard) {
    for (std::size_t i = 0; i < answers.size(); ++i)
      for (std::size_t j = i + 1; j < answers.size(); ++j)
        if (!answers_equivalent(answers[i], answers[j], policy)) return false;
    return true;
  }
  return std::all_of(answers.begin() + 1, answers.end(), [&](const Answer& a) {
    return answers_equivalent(answers.front(), a, policy);
  });
}

}  // namespace hgc
