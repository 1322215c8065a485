#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace descentlab {

// Dense vector of model parameters w in R^p.
using Weights = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Cumulative oracle-call counters for a run.  Only algorithmic evaluations
// are counted; instrumentation (trace metrics) is free.
struct OracleCounts {
  std::int64_t function_evals = 0;
  std::int64_t gradient_evals = 0;
  std::int64_t component_evals = 0;
  std::int64_t prox_evals = 0;

  OracleCounts& operator+=(const OracleCounts& o) {
    function_evals += o.function_evals;
    gradient_evals += o.gradient_evals;
    component_evals += o.component_evals;
    prox_evals += o.prox_evals;
    return *this;
  }
};

}  // namespace descentlab
