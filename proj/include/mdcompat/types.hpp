#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace mdcompat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using MatrixRef = Eigen::Ref<MatrixXd>;
using VectorRef = Eigen::Ref<VectorXd>;
using ConstMatrixRef = Eigen::Ref<const MatrixXd>;
using ConstVectorRef = Eigen::Ref<const VectorXd>;

/// 1 = observed, 0 = missing.
using MaskMatrix = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

using IndexList = std::vector<Index>;

}  // namespace mdcompat
