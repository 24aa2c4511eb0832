#pragma once

// JSON conversions shared by the package and bundle codecs.

#include <string>

#include <json.hpp>

#include "mdcompat/error.hpp"
#include "mdcompat/glm.hpp"
#include "mdcompat/tabular.hpp"

namespace mdcompat::codec {

using nlohmann::json;

json to_json(const VectorXd& v);
json to_json(const MatrixXd& m);
VectorXd vector_from(const json& j);
MatrixXd matrix_from(const json& j);

json to_json(const LinearFit& fit);
json to_json(const LogisticFit& fit);
LinearFit linear_fit_from(const json& j);
LogisticFit logistic_fit_from(const json& j);

json to_json(const ColumnSpec& spec);
ColumnSpec column_spec_from(const json& j);

/// Field lookup that reports the missing key instead of a generic exception.
const json& field(const json& j, const char* key);

}  // namespace mdcompat::codec
