#pragma once

#include <cstdint>
#include <string>

namespace ptfprg {

// SHA-1 hex digest of a byte string. Used for content hashes in report and
// sample-file headers (provenance only, not security).
std::string sha1_hex(const std::string& data);

}  // namespace ptfprg
