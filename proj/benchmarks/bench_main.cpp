#include <benchmark/benchmark.h>

#include "snapjump/beam_lab.hpp"
#include "snapjump/robot.hpp"
#include "snapjump/stepper.hpp"
#include "snapjump/surrogate.hpp"

using namespace snapjump;

namespace {

// Buckled 100-node beam: the hot geometry for force/Hessian assembly.
struct BeamFixture {
  BeamSpec spec;
  DiscreteStructure s;
  DofVector q;
  BeamFixture() : s(make_beam_structure(spec)),
                  q(make_buckled_beam(spec, BucklingBranch::kUp)) {}
};

const BeamFixture& beam_fixture() {
  static const BeamFixture f;
  return f;
}

}  // namespace

static void BM_ElasticForce(benchmark::State& state) {
  const auto& f = beam_fixture();
  DofVector force(f.q.size());
  for (auto _ : state) {
    force.setZero();
    accumulate_elastic_force(f.s, f.q, force);
    benchmark::DoNotOptimize(force.data());
  }
}
BENCHMARK(BM_ElasticForce);

static void BM_ElasticHessian(benchmark::State& state) {
  const auto& f = beam_fixture();
  std::vector<Eigen::Triplet<double>> triplets;
  for (auto _ : state) {
    triplets.clear();
    accumulate_elastic_hessian(f.s, f.q, triplets);
    benchmark::DoNotOptimize(triplets.data());
  }
}
BENCHMARK(BM_ElasticHessian);

static void BM_ImplicitStepBeam(benchmark::State& state) {
  // One settled implicit Euler step of the clamped buckled beam, including
  // the Newton solve and sparse factorization reuse.
  const auto& f = beam_fixture();
  BoundarySpec bc;
  for (const auto& [dof, val] : clamp_dofs(f.spec, 0.0, 0.0)) bc.fix(dof, val);
  StepperConfig cfg;
  cfg.dt = 1e-5;
  cfg.gravity = 0.0;
  Stepper session(f.s, nullptr, bc, cfg);

  SystemState st;
  st.q = f.q;
  st.qdot = DofVector::Zero(f.q.size());
  for (auto _ : state) {
    SystemState next = session.step(st);
    benchmark::DoNotOptimize(next.q.data());
    st.t = 0.0;  // keep the workload identical every iteration
  }
}
BENCHMARK(BM_ImplicitStepBeam);

static void BM_ImplicitStepRobot(benchmark::State& state) {
  // Full 190-node robot resting on the barrier with friction: the per-step
  // cost that dominates jump simulations and dataset generation.
  RobotDesign design;
  ContactModel contact;
  contact.friction = design.friction;
  const RobotAssembly assembly = assemble_robot(design, contact);
  BoundarySpec none;
  StepperConfig cfg;
  cfg.dt = 1e-5;
  Stepper session(assembly.structure, &contact, none, cfg);

  SystemState st;
  st.q = assembly.q0;
  st.qdot = DofVector::Zero(assembly.q0.size());
  for (auto _ : state) {
    SystemState next = session.step(st);
    benchmark::DoNotOptimize(next.q.data());
    st.t = 0.0;
  }
}
BENCHMARK(BM_ImplicitStepRobot);

static void BM_SurrogateForward(benchmark::State& state) {
  const SurrogateModel model = SurrogateModel::make({372, 372, 372}, 7);
  const Eigen::Vector4d p(0.1, 0.2, 0.768, 0.3);
  for (auto _ : state) {
    Eigen::Vector2d y = model.forward(p);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_SurrogateForward);

static void BM_SurrogateForwardBatch(benchmark::State& state) {
  const SurrogateModel model = SurrogateModel::make({372, 372, 372}, 7);
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd P(4, n);
  for (int k = 0; k < n; ++k)
    P.col(k) << 0.01 + 0.18 * k / n, 0.1 + 0.2 * k / n, 1.0, 0.3;
  for (auto _ : state) {
    Eigen::MatrixXd Y = model.forward_batch(P);
    benchmark::DoNotOptimize(Y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SurrogateForwardBatch)->Arg(64)->Arg(1024);

static void BM_SurrogateInputGradient(benchmark::State& state) {
  const SurrogateModel model = SurrogateModel::make({372, 372, 372}, 7);
  const Eigen::Vector4d p(0.1, 0.2, 0.768, 0.3);
  for (auto _ : state) {
    Eigen::Matrix<double, 2, 4> g = model.input_gradient(p);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_SurrogateInputGradient);

BENCHMARK_MAIN();
