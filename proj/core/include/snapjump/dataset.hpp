#pragma once

#include <functional>
#include <string>
#include <vector>

#include "snapjump/robot.hpp"

namespace snapjump {

// One training sample: design tuple plus simulated normalized apex.
// flag: 0 = ok, 1 = no jump, 2 = simulation failure.
struct DatasetRow {
  double dalpha = 0.0;
  double eps = 0.0;
  double mbar = 0.0;
  double mu = 0.0;
  double xbar = 0.0;
  double ybar = 0.0;
  int flag = 0;
};

// Design-space box; defaults are the fabrication/actuation ranges.
struct DesignRanges {
  double dalpha_lo = 0.01, dalpha_hi = 0.19;
  double eps_lo = 0.1, eps_hi = 0.3;
  double mbar_lo = 0.3, mbar_hi = 2.0;
  double mu_lo = 0.1, mu_hi = 0.6;
};

// Uniform grid with points_per_dim samples per dimension (endpoints
// included; a single point sits at the range midpoint). Iteration order is
// row-major over (dalpha, eps, mbar, mu) with mu fastest.
std::vector<NormalizedParams> sample_grid(int points_per_dim,
                                          const DesignRanges& ranges = {});

// Latin-hypercube alternative for the same box, seeded and deterministic.
std::vector<NormalizedParams> sample_lhs(int count, unsigned seed,
                                         const DesignRanges& ranges = {});

struct GenerateOptions {
  JumpOptions jump;
  int jobs = 1;
  // Called after each finished row with (rows_done, rows_total).
  std::function<void(int, int)> progress;
};

// Runs forward_model for every tuple and appends rows to a CSV with header
// `dalpha,eps,mbar,mu,xbar,ybar,flag`, flushed row by row in tuple order.
// If the file already holds a prefix of `params` (matched on the tuple
// columns), generation resumes after it. Per-row failures are recorded with
// flag = 2, never thrown. Returns all rows (existing + new).
std::vector<DatasetRow> generate_dataset(const std::vector<NormalizedParams>& params,
                                         const std::string& csv_path,
                                         const MountingRule& rule,
                                         const GenerateOptions& options = {});

std::vector<DatasetRow> load_dataset(const std::string& csv_path);

// Rows usable for training (flag == 0).
std::vector<DatasetRow> ok_rows(const std::vector<DatasetRow>& rows);

}  // namespace snapjump
