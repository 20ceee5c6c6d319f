#pragma once

#include <Eigen/Dense>

namespace ips {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

} // namespace ips
