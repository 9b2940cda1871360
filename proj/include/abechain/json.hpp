#pragma once

#include <json.hpp>

namespace abechain {

// Insertion-ordered JSON keeps persisted field order canonical, which the
// chain file format and replay determinism depend on.
using Json = nlohmann::ordered_json;

}  // namespace abechain
