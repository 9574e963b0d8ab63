#pragma once

#include <cstdint>
#include <vector>

#include "prefnet/sim/deployment.hpp"
#include "prefnet/sim/request.hpp"

namespace prefnet::datagen {

struct DatasetRecord {
  std::int64_t t = 0;
  std::vector<sim::ServiceRequest> requests;
  sim::Deployment deployment;
  bool operator==(const DatasetRecord&) const = default;
};

}  // namespace prefnet::datagen
