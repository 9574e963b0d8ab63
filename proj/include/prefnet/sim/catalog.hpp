#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace prefnet::sim {

// Fixed order; indexes annotation columns and embedding rows.
enum class VnfType : int { kFirewall = 0, kIds = 1, kProxy = 2, kNat = 3, kWano = 4 };

inline constexpr std::size_t kNumVnfTypes = 5;

inline constexpr std::array<VnfType, kNumVnfTypes> kAllVnfTypes = {
    VnfType::kFirewall, VnfType::kIds, VnfType::kProxy, VnfType::kNat, VnfType::kWano};

std::string_view vnf_name(VnfType type);

enum class ServiceType : int {
  kNatFirewallIds = 0,
  kNatProxy = 1,
  kNatWano = 2,
  kNatFirewallWanoIds = 3,
};

inline constexpr std::size_t kNumServiceTypes = 4;

std::span<const VnfType> service_chain(ServiceType type);
std::string_view service_name(ServiceType type);
ServiceType service_from_index(int index);

// Per-type processing capacity of one instance, in bandwidth units.
struct VnfCatalog {
  std::array<double, kNumVnfTypes> instance_capacity{500.0, 500.0, 500.0, 500.0, 500.0};

  double capacity(VnfType type) const { return instance_capacity[static_cast<std::size_t>(type)]; }
};

}  // namespace prefnet::sim
