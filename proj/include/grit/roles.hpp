#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace grit {

// The five MUC-4 event roles. The enumerator order is the fixed
// linearization order used everywhere (targets, reports, dumps).
enum class RoleId : std::uint8_t {
  PerpInd = 0,
  PerpOrg = 1,
  Target = 2,
  Victim = 3,
  Weapon = 4,
};

inline constexpr std::size_t kNumRoles = 5;

inline constexpr std::array<RoleId, kNumRoles> kAllRoles = {
    RoleId::PerpInd, RoleId::PerpOrg, RoleId::Target,
    RoleId::Victim, RoleId::Weapon};

constexpr std::size_t role_rank(RoleId r) { return static_cast<std::size_t>(r); }

constexpr std::string_view role_name(RoleId r) {
  switch (r) {
    case RoleId::PerpInd: return "PerpInd";
    case RoleId::PerpOrg: return "PerpOrg";
    case RoleId::Target: return "Target";
    case RoleId::Victim: return "Victim";
    case RoleId::Weapon: return "Weapon";
  }
  return "?";
}

inline std::optional<RoleId> parse_role(std::string_view name) {
  for (RoleId r : kAllRoles) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

}  // namespace grit
