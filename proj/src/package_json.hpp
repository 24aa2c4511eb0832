#pragma once

#include "json_codec.hpp"
#include "mdcompat/impute.hpp"

namespace mdcompat::detail {

codec::json package_to_json(const ImputationPackage& pkg);
ImputationPackage package_from_json_checked(const codec::json& doc);

}  // namespace mdcompat::detail
