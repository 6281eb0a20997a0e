#pragma once

#include <stdexcept>
#include <string>

namespace fairrep {

// Single exception type for contract violations and runtime failures. The
// message is the stable part callers may match on (e.g. "empty sample").
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairrep
