#include "snapjump/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "snapjump/io.hpp"

namespace snapjump {

namespace {

constexpr const char* kHeader = "dalpha,eps,mbar,mu,xbar,ybar,flag";

std::vector<double> axis(double lo, double hi, int n) {
  std::vector<double> v;
  v.reserve(n);
  if (n == 1) {
    v.push_back(0.5 * (lo + hi));
    return v;
  }
  for (int i = 0; i < n; ++i)
    v.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  return v;
}

DatasetRow run_row(const NormalizedParams& p, const MountingRule& rule,
                   const JumpOptions& jump) {
  DatasetRow row;
  row.dalpha = p.dalpha;
  row.eps = p.eps;
  row.mbar = p.mbar;
  row.mu = p.mu;
  try {
    const JumpResult r = forward_model(p, rule, jump);
    row.xbar = r.xbar;
    row.ybar = r.ybar;
    row.flag = r.jumped ? 0 : 1;
  } catch (const std::exception&) {
    row.flag = 2;
  }
  return row;
}

bool same_tuple(const DatasetRow& row, const NormalizedParams& p) {
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  return close(row.dalpha, p.dalpha) && close(row.eps, p.eps) &&
         close(row.mbar, p.mbar) && close(row.mu, p.mu);
}

void append_row(std::ofstream& out, const DatasetRow& r) {
  out << format_full(r.dalpha) << ',' << format_full(r.eps) << ','
      << format_full(r.mbar) << ',' << format_full(r.mu) << ','
      << format_full(r.xbar) << ',' << format_full(r.ybar) << ',' << r.flag
      << '\n';
  out.flush();
}

}  // namespace

std::vector<NormalizedParams> sample_grid(int points_per_dim,
                                          const DesignRanges& g) {
  if (points_per_dim < 1) throw AssemblyError("points_per_dim must be >= 1");
  const auto da = axis(g.dalpha_lo, g.dalpha_hi, points_per_dim);
  const auto ep = axis(g.eps_lo, g.eps_hi, points_per_dim);
  const auto mb = axis(g.mbar_lo, g.mbar_hi, points_per_dim);
  const auto mu = axis(g.mu_lo, g.mu_hi, points_per_dim);
  std::vector<NormalizedParams> out;
  out.reserve(da.size() * ep.size() * mb.size() * mu.size());
  for (double a : da)
    for (double e : ep)
      for (double m : mb)
        for (double f : mu) out.push_back({a, e, m, f});
  return out;
}

std::vector<NormalizedParams> sample_lhs(int count, unsigned seed,
                                         const DesignRanges& g) {
  if (count < 1) throw AssemblyError("sample count must be >= 1");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // One stratified permutation per dimension.
  auto column = [&](double lo, double hi) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i)
      v[i] = lo + (hi - lo) * (i + unit(rng)) / count;
    std::shuffle(v.begin(), v.end(), rng);
    return v;
  };
  const auto da = column(g.dalpha_lo, g.dalpha_hi);
  const auto ep = column(g.eps_lo, g.eps_hi);
  const auto mb = column(g.mbar_lo, g.mbar_hi);
  const auto mu = column(g.mu_lo, g.mu_hi);
  std::vector<NormalizedParams> out(count);
  for (int i = 0; i < count; ++i) out[i] = {da[i], ep[i], mb[i], mu[i]};
  return out;
}

std::vector<DatasetRow> load_dataset(const std::string& csv_path) {
  const CsvTable t = read_csv(csv_path);
  std::vector<DatasetRow> rows;
  if (t.columns.empty()) return rows;
  const int ia = t.col("dalpha"), ie = t.col("eps"), im = t.col("mbar"),
            iu = t.col("mu"), ix = t.col("xbar"), iy = t.col("ybar"),
            fl = t.col("flag");
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows)
    rows.push_back({r[ia], r[ie], r[im], r[iu], r[ix], r[iy],
                    static_cast<int>(std::lround(r[fl]))});
  return rows;
}

std::vector<DatasetRow> ok_rows(const std::vector<DatasetRow>& rows) {
  std::vector<DatasetRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    if (r.flag == 0) out.push_back(r);
  return out;
}

std::vector<DatasetRow> generate_dataset(
    const std::vector<NormalizedParams>& params, const std::string& csv_path,
    const MountingRule& rule, const GenerateOptions& options) {
  // Resume: accept an existing file whose rows form a prefix of `params`.
  std::vector<DatasetRow> done;
  {
    std::ifstream probe(csv_path);
    if (probe.good()) {
      probe.close();
      done = load_dataset(csv_path);
      if (done.size() > params.size())
        throw AssemblyError("existing dataset at '" + csv_path +
                            "' is larger than the requested grid");
      for (size_t i = 0; i < done.size(); ++i)
        if (!same_tuple(done[i], params[i]))
          throw AssemblyError("existing dataset at '" + csv_path +
                              "' does not match the requested grid at row " +
                              std::to_string(i));
    }
  }

  std::ofstream out;
  if (done.empty()) {
    out.open(csv_path, std::ios::trunc);
    if (!out) throw AssemblyError("cannot open '" + csv_path + "'");
    out << kHeader << '\n';
    out.flush();
  } else {
    out.open(csv_path, std::ios::app);
    if (!out) throw AssemblyError("cannot open '" + csv_path + "'");
  }

  const int total = static_cast<int>(params.size());
  const int first = static_cast<int>(done.size());
  const int jobs = std::max(1, options.jobs);

  if (jobs == 1) {
    for (int i = first; i < total; ++i) {
      DatasetRow row = run_row(params[i], rule, options.jump);
      append_row(out, row);
      done.push_back(row);
      if (options.progress) options.progress(i + 1, total);
    }
    return done;
  }

  // Fan out over rows; a single writer drains results in tuple order so the
  // file stays a resumable prefix.
  std::mutex mtx;
  std::condition_variable cv;
  std::vector<DatasetRow> slots(total);
  std::vector<char> ready(total, 0);
  std::atomic<int> next_index{first};

  auto worker = [&]() {
    for (;;) {
      const int i = next_index.fetch_add(1);
      if (i >= total) return;
      DatasetRow row = run_row(params[i], rule, options.jump);
      {
        std::lock_guard<std::mutex> lock(mtx);
        slots[i] = row;
        ready[i] = 1;
      }
      cv.notify_one();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);

  for (int i = first; i < total; ++i) {
    std::unique_lock<std::mutex> lock(mtx);
    cv.wait(lock, [&] { return ready[i] == 1; });
    DatasetRow row = slots[i];
    lock.unlock();
    append_row(out, row);
    done.push_back(row);
    if (options.progress) options.progress(i + 1, total);
  }
  for (auto& t : pool) t.join();
  return done;
}

}  // namespace snapjump
