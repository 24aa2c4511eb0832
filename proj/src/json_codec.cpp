#include "json_codec.hpp"

namespace mdcompat::codec {

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

VectorXd vector_from(const json& j) {
  if (!j.is_array()) throw DecodeError("expected a numeric array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

MatrixXd matrix_from(const json& j) {
  if (!j.is_array()) throw DecodeError("expected a matrix (array of rows)");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw DecodeError("ragged matrix");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw DecodeError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw DecodeError(std::string("missing field '") + key + "'");
  return *it;
}

json to_json(const LinearFit& fit) {
  return json{{"family", "linear"},
              {"coefficients", to_json(fit.coefficients)},
              {"covariance", to_json(fit.coefficient_covariance)},
              {"unscaled_covariance", to_json(fit.unscaled_covariance)},
              {"residual_variance", fit.residual_variance},
              {"dof", fit.dof},
              {"n", fit.n}};
}

json to_json(const LogisticFit& fit) {
  return json{{"family", "logistic"},
              {"coefficients", to_json(fit.coefficients)},
              {"covariance", to_json(fit.coefficient_covariance)},
              {"converged", fit.converged},
              {"ridge_used", fit.ridge_used},
              {"iterations", fit.iterations},
              {"gradient_norm", fit.gradient_norm},
              {"n", fit.n}};
}

LinearFit linear_fit_from(const json& j) {
  LinearFit fit;
  fit.coefficients = vector_from(field(j, "coefficients"));
  fit.coefficient_covariance = matrix_from(field(j, "covariance"));
  fit.unscaled_covariance = matrix_from(field(j, "unscaled_covariance"));
  fit.residual_variance = field(j, "residual_variance").get<double>();
  fit.dof = field(j, "dof").get<Index>();
  fit.n = field(j, "n").get<Index>();
  return fit;
}

LogisticFit logistic_fit_from(const json& j) {
  LogisticFit fit;
  fit.coefficients = vector_from(field(j, "coefficients"));
  fit.coefficient_covariance = matrix_from(field(j, "covariance"));
  fit.converged = field(j, "converged").get<bool>();
  fit.ridge_used = field(j, "ridge_used").get<double>();
  fit.iterations = field(j, "iterations").get<Index>();
  fit.gradient_norm = field(j, "gradient_norm").get<double>();
  fit.n = field(j, "n").get<Index>();
  return fit;
}

json to_json(const ColumnSpec& spec) {
  return json{{"name", spec.name}, {"kind", to_string(spec.kind)}, {"role", to_string(spec.role)}};
}

ColumnSpec column_spec_from(const json& j) {
  ColumnSpec spec;
  spec.name = field(j, "name").get<std::string>();
  spec.kind = parse_column_kind(field(j, "kind").get<std::string>());
  const auto role = field(j, "role").get<std::string>();
  if (role == "predictor") spec.role = ColumnRole::predictor;
  else if (role == "outcome") spec.role = ColumnRole::outcome;
  else if (role == "latent") spec.role = ColumnRole::latent;
  else if (role == "auxiliary") spec.role = ColumnRole::auxiliary;
  else throw DecodeError("unknown column role '" + role + "'");
  return spec;
}

}  // namespace mdcompat::codec
