#include "descentlab/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "descentlab/errors.hpp"

namespace descentlab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  // Shortest of the round-trip precisions.
  for (int prec : {15, 16, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_run_csv(const std::string& path, const RunRecord& run,
                   const ProblemInstance& problem) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "t,F,F_gap,grad_norm_sq,dist_sq,eta,oracle_grads,oracle_prox\n";
  const auto fstar = problem.constants().F_star;
  for (std::size_t t = 0; t < run.f.size(); ++t) {
    const double gap =
        fstar ? run.f[t] - *fstar : std::numeric_limits<double>::quiet_NaN();
    const double eta = t < run.eta.size() ? run.eta[t] : 0.0;
    const auto& c = run.counts[t];
    out << t << ',' << format_double(run.f[t]) << ',' << format_double(gap) << ','
        << format_double(run.grad_norm_sq[t]) << ',' << format_double(run.dist_sq[t])
        << ',' << format_double(eta) << ',' << (c.gradient_evals + c.component_evals)
        << ',' << c.prox_evals << '\n';
  }
}

void write_certificate_csv(const std::string& path, const CertificateTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "t,D,Delta,E,omega,slack,bound\n";
  for (std::size_t t = 0; t < trace.Delta.size(); ++t) {
    out << t << ',' << format_double(trace.D[t]) << ',' << format_double(trace.Delta[t])
        << ',' << format_double(trace.E[t]) << ',' << format_double(trace.omega[t])
        << ',' << format_double(trace.slack[t]) << ',' << format_double(trace.bound[t])
        << '\n';
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                  : std::stod(cell));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<double> csv_column(const CsvTable& table, const std::string& name) {
  std::size_t col = table.header.size();
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j] == name) {
      col = j;
      break;
    }
  }
  if (col == table.header.size()) throw InvalidArgument("csv column not found: " + name);
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (col >= row.size()) throw Error("csv row too short");
    out.push_back(row[col]);
  }
  return out;
}

}  // namespace descentlab
