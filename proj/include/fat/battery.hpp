#pragma once

#include <Eigen/Dense>

#include <string>

namespace fat {

enum class Procedure { Unadjusted, Fat, OracleFat, PcaPfa };

std::string to_string(Procedure p);
Procedure procedure_from_string(const std::string& name);

// Per-unit test statistics and two-sided normal p-values for one procedure.
// For Unadjusted / Fat / OracleFat, p_values[i] == 2*Phi(-|statistics[i]|);
// PcaPfa reuses the unadjusted statistics and differs only in thresholding.
struct TestBattery {
    Procedure procedure = Procedure::Unadjusted;
    Eigen::VectorXd statistics;  // length N
    Eigen::VectorXd p_values;    // length N, in (0,1]
};

}  // namespace fat
