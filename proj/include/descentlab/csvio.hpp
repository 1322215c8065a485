#pragma once

#include <string>
#include <vector>

#include "descentlab/certificates.hpp"
#include "descentlab/methods.hpp"
#include "descentlab/problems.hpp"

namespace descentlab {

// Per-iteration trace with the fixed column order
// t,F,F_gap,grad_norm_sq,dist_sq,eta,oracle_grads,oracle_prox.
// eta of the final row (no step taken) is 0.
void write_run_csv(const std::string& path, const RunRecord& run,
                   const ProblemInstance& problem);

// Certificate columns t,D,Delta,E,omega,slack,bound.
void write_certificate_csv(const std::string& path, const CertificateTrace& trace);

// One CSV cell per double, shortest round-trip formatting; nan prints "nan".
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path);
std::vector<double> csv_column(const CsvTable& table, const std::string& name);

}  // namespace descentlab
