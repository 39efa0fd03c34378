#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snapjump/dataset.hpp"

using namespace snapjump;

namespace {

std::string temp_csv(const char* tag) {
  return (std::filesystem::temp_directory_path() /
          (std::string("snapjump_ds_") + tag + ".csv"))
      .string();
}

std::string slurp(const std::string& path) {
  std::ostringstream out;
  out << std::ifstream(path).rdbuf();
  return out.str();
}

MountingRule flat_rule() {
  MountingRule rule;
  rule.eps = {0.05, 0.35};
  rule.h1 = {1.6e-3, 1.6e-3};
  rule.h2 = {5.3e-3, 5.3e-3};
  return rule;
}

}  // namespace

TEST_CASE("grid sampling: size, order, and endpoints") {
  SUBCASE("n = 1 sits at the box midpoint") {
    const auto pts = sample_grid(1);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].dalpha == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(pts[0].eps == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(pts[0].mbar == doctest::Approx(1.15).epsilon(1e-14));
    CHECK(pts[0].mu == doctest::Approx(0.35).epsilon(1e-14));
  }

  SUBCASE("n = 3 spans the box, mu fastest") {
    const auto pts = sample_grid(3);
    REQUIRE(pts.size() == 81);
    CHECK(pts.front().dalpha == doctest::Approx(0.01));
    CHECK(pts.front().eps == doctest::Approx(0.1));
    CHECK(pts.front().mbar == doctest::Approx(0.3));
    CHECK(pts.front().mu == doctest::Approx(0.1));
    CHECK(pts.back().dalpha == doctest::Approx(0.19));
    CHECK(pts.back().mu == doctest::Approx(0.6));
    // mu cycles first.
    CHECK(pts[1].mu == doctest::Approx(0.35));
    CHECK(pts[1].mbar == doctest::Approx(0.3));
    CHECK(pts[3].mu == doctest::Approx(0.1));
    CHECK(pts[3].mbar == doctest::Approx(1.15));
    // eps advances every 9 entries, dalpha (slowest) every 27.
    CHECK(pts[9].dalpha == doctest::Approx(0.01));
    CHECK(pts[9].eps == doctest::Approx(0.2));
    CHECK(pts[27].dalpha == doctest::Approx(0.1));
    CHECK(pts[27].eps == doctest::Approx(0.1));
  }

  SUBCASE("n = 7 yields the full factorial") {
    CHECK(sample_grid(7).size() == 2401);
  }
}

TEST_CASE("latin hypercube sampling is seeded and stratified") {
  const auto a = sample_lhs(40, 99);
  const auto b = sample_lhs(40, 99);
  const auto c = sample_lhs(40, 100);
  REQUIRE(a.size() == 40);

  bool identical = true, differs = false;
  for (int k = 0; k < 40; ++k) {
    identical = identical && a[k].dalpha == b[k].dalpha &&
                a[k].eps == b[k].eps && a[k].mbar == b[k].mbar &&
                a[k].mu == b[k].mu;
    differs = differs || a[k].dalpha != c[k].dalpha;
  }
  CHECK(identical);
  CHECK(differs);

  // Stratification: exactly one sample per 1/40 stratum in each dimension.
  auto strata_covered = [&](auto get, double lo, double hi) {
    std::vector<int> hits(40, 0);
    for (const auto& p : a) {
      const int s = std::min(
          39, static_cast<int>(40.0 * (get(p) - lo) / (hi - lo)));
      hits[s]++;
    }
    return std::all_of(hits.begin(), hits.end(),
                       [](int h) { return h == 1; });
  };
  const DesignRanges r;
  CHECK(strata_covered([](const NormalizedParams& p) { return p.dalpha; },
                       r.dalpha_lo, r.dalpha_hi));
  CHECK(strata_covered([](const NormalizedParams& p) { return p.eps; },
                       r.eps_lo, r.eps_hi));
  CHECK(strata_covered([](const NormalizedParams& p) { return p.mbar; },
                       r.mbar_lo, r.mbar_hi));
  CHECK(strata_covered([](const NormalizedParams& p) { return p.mu; },
                       r.mu_lo, r.mu_hi));
}

TEST_CASE("generation writes, resumes, and guards against mismatch") {
  // Tiny grid at coarse dt: 2 tuples, keep runtime low.
  DesignRanges narrow;
  narrow.dalpha_lo = narrow.dalpha_hi = 0.1;
  narrow.eps_lo = narrow.eps_hi = 0.2;
  narrow.mbar_lo = narrow.mbar_hi = 0.768;
  narrow.mu_lo = 0.2;
  narrow.mu_hi = 0.4;

  const auto two = sample_grid(2, narrow);
  const std::vector<NormalizedParams> pts = {two[0], two[1]};  // mu 0.2, 0.4

  const MountingRule rule = flat_rule();
  GenerateOptions opts;
  opts.jump.dt = 1e-4;

  const std::string path = temp_csv("gen");
  std::remove(path.c_str());

  int calls = 0;
  opts.progress = [&](int done, int total) {
    CHECK(total == 2);
    CHECK(done >= ++calls);
  };

  const auto rows = generate_dataset(pts, path, rule, opts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mu == doctest::Approx(0.2));
  CHECK(rows[1].mu == doctest::Approx(0.4));
  CHECK(rows[0].flag == 0);
  CHECK(rows[0].ybar > 1.0);
  const std::string full = slurp(path);
  CHECK(full.substr(0, full.find('\n')) ==
        "dalpha,eps,mbar,mu,xbar,ybar,flag");

  SUBCASE("rerun is a no-op resume with byte-identical output") {
    GenerateOptions no_progress;
    no_progress.jump.dt = 1e-4;
    const auto again = generate_dataset(pts, path, rule, no_progress);
    REQUIRE(again.size() == 2);
    CHECK(again[0].ybar == rows[0].ybar);
    CHECK(again[1].ybar == rows[1].ybar);
    CHECK(slurp(path) == full);
  }

  SUBCASE("truncated file resumes from the cut") {
    // Drop the second data row, keep header + first row.
    std::string head = full;
    size_t p = head.find('\n');
    p = head.find('\n', p + 1);
    head.resize(p + 1);
    std::ofstream(path, std::ios::trunc) << head;

    GenerateOptions resume_opts;
    resume_opts.jump.dt = 1e-4;
    const auto resumed = generate_dataset(pts, path, rule, resume_opts);
    REQUIRE(resumed.size() == 2);
    CHECK(resumed[0].ybar == rows[0].ybar);
    CHECK(resumed[1].ybar == doctest::Approx(rows[1].ybar).epsilon(1e-12));
  }

  SUBCASE("prefix with different tuples throws") {
    auto other = pts;
    other[0].mu = 0.33;
    CHECK_THROWS_AS(generate_dataset(other, path, rule, opts),
                    AssemblyError);
  }

  SUBCASE("more rows on disk than requested throws") {
    std::vector<NormalizedParams> fewer = {pts[0]};
    CHECK_THROWS_AS(generate_dataset(fewer, path, rule, opts),
                    AssemblyError);
  }

  std::remove(path.c_str());
}

TEST_CASE("load_dataset and ok_rows round-trip flags") {
  const std::string path = temp_csv("load");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "dalpha,eps,mbar,mu,xbar,ybar,flag\n";
    out << "0.1,0.2,0.768,0.3,0.25,14.5,0\n";
    out << "0.1,0.2,0.768,0.6,0,0.1,1\n";
    out << "0.15,0.25,1,0.2,0,0,2\n";
  }
  const auto rows = load_dataset(path);
  std::remove(path.c_str());

  REQUIRE(rows.size() == 3);
  CHECK(rows[0].ybar == 14.5);
  CHECK(rows[1].flag == 1);
  CHECK(rows[2].flag == 2);
  const auto ok = ok_rows(rows);
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].mu == 0.3);
}
