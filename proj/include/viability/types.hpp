#pragma once

#include <Eigen/Dense>

namespace viability {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace viability
