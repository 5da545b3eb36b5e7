#pragma once

#include <array>
#include <string>
#include <string_view>

#include "recip/error.hpp"

namespace recip::agents {

enum class AgentKind { NlAnalytic, LolaAnalytic, RcAnalytic, NlPpo, RcPpo };

inline constexpr std::array<std::pair<AgentKind, std::string_view>, 5> kAgentKindNames{{
    {AgentKind::NlAnalytic, "NL-Analytic"},
    {AgentKind::LolaAnalytic, "LOLA-Analytic"},
    {AgentKind::RcAnalytic, "RC-Analytic"},
    {AgentKind::NlPpo, "NL-PPO"},
    {AgentKind::RcPpo, "RC-PPO"},
}};

inline std::string_view to_string(AgentKind k) {
  for (const auto& [kind, name] : kAgentKindNames)
    if (kind == k) return name;
  return "?";
}

// Accepts the full names above plus the short roster names RC, NL and LOLA,
// which resolve to the analytic kinds.
inline AgentKind parse_agent_kind(std::string_view s) {
  for (const auto& [kind, name] : kAgentKindNames)
    if (name == s) return kind;
  if (s == "NL") return AgentKind::NlAnalytic;
  if (s == "LOLA") return AgentKind::LolaAnalytic;
  if (s == "RC") return AgentKind::RcAnalytic;
  throw ConfigError("unknown agent kind '" + std::string(s) + "'");
}

inline bool is_analytic(AgentKind k) {
  return k == AgentKind::NlAnalytic || k == AgentKind::LolaAnalytic || k == AgentKind::RcAnalytic;
}

inline bool is_reciprocator(AgentKind k) { return k == AgentKind::RcAnalytic || k == AgentKind::RcPpo; }

// Short label used in round-robin tables: RC, NL or LOLA.
inline std::string_view short_name(AgentKind k) {
  switch (k) {
    case AgentKind::NlAnalytic:
    case AgentKind::NlPpo:
      return "NL";
    case AgentKind::LolaAnalytic:
      return "LOLA";
    default:
      return "RC";
  }
}

}  // namespace recip::agents
