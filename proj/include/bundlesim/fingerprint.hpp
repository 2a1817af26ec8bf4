#pragma once

#include "bundlesim/master.hpp"
#include "bundlesim/model.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace bundlesim {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Canonical one-line text forms (shortest round-trip doubles) used for
/// fingerprinting.
std::string canonical_text(const model::SystemConfig& cfg);
std::string canonical_text(const model::PulseTrain& train);
std::string canonical_text(const master::IntegrationPlan& plan);

std::string fingerprint_hex(std::uint64_t fp);

}  // namespace bundlesim
