#include "prefnet/sim/catalog.hpp"

#include <string>

#include "prefnet/core/errors.hpp"

namespace prefnet::sim {

namespace {

using enum VnfType;

constexpr std::array<VnfType, 3> kChain0 = {kNat, kFirewall, kIds};
constexpr std::array<VnfType, 2> kChain1 = {kNat, kProxy};
constexpr std::array<VnfType, 2> kChain2 = {kNat, kWano};
constexpr std::array<VnfType, 4> kChain3 = {kNat, kFirewall, kWano, kIds};

}  // namespace

std::string_view vnf_name(VnfType type) {
  switch (type) {
    case kFirewall: return "firewall";
    case kIds: return "IDS";
    case kProxy: return "proxy";
    case kNat: return "NAT";
    case kWano: return "WANO";
  }
  return "?";
}

std::span<const VnfType> service_chain(ServiceType type) {
  switch (type) {
    case ServiceType::kNatFirewallIds: return kChain0;
    case ServiceType::kNatProxy: return kChain1;
    case ServiceType::kNatWano: return kChain2;
    case ServiceType::kNatFirewallWanoIds: return kChain3;
  }
  throw ContractViolation("service_chain: unknown service type");
}

std::string_view service_name(ServiceType type) {
  switch (type) {
    case ServiceType::kNatFirewallIds: return "NAT-firewall-IDS";
    case ServiceType::kNatProxy: return "NAT-proxy";
    case ServiceType::kNatWano: return "NAT-WANO";
    case ServiceType::kNatFirewallWanoIds: return "NAT-firewall-WANO-IDS";
  }
  return "?";
}

ServiceType service_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumServiceTypes)) {
    throw ContractViolation("service type index out of range: " + std::to_string(index));
  }
  return static_cast<ServiceType>(index);
}

}  // namespace prefnet::sim
