#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "sam/loader.hpp"
#include "sam/monitor.hpp"
#include "sam/tracegen.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string& model_text() {
  static std::string text =
      read_file(std::string(SAM_MODEL_DIR) + "/maf-editor.sam");
  return text;
}

const sam::SamModel& model() {
  static sam::SamModel m = sam::load_model_text(model_text());
  return m;
}

sam::Scenario scenario(int iterations) {
  sam::Scenario sc;
  sc.loop_bound = iterations;
  sc.seed = 7;
  for (int i = 0; i < iterations; ++i) {
    sc.splits.push_back({"more-events?", "new-event", {}});
    sc.splits.push_back({"takeoff?", {}, std::string("get-additional-info")});
  }
  sc.splits.push_back({"more-events?", "save-mission", {}});
  return sc;
}

void BM_ReadForms(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(sam::read_all(model_text()));
  }
}
BENCHMARK(BM_ReadForms);

void BM_LoadModel(benchmark::State& state) {
  std::vector<sam::SExpr> forms = sam::read_all(model_text());
  for (auto _ : state) {
    benchmark::DoNotOptimize(sam::load_model(forms));
  }
}
BENCHMARK(BM_LoadModel);

void BM_GenerateTrace(benchmark::State& state) {
  sam::Scenario sc = scenario(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sam::generate(model(), sc));
  }
}
BENCHMARK(BM_GenerateTrace)->Arg(1)->Arg(4);

void BM_Monitor(benchmark::State& state) {
  sam::Scenario sc = scenario(static_cast<int>(state.range(0)));
  std::vector<sam::Observation> trace = sam::generate(model(), sc);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sam::run_monitor(model(), trace));
  }
  state.SetItemsProcessed(int64_t(state.iterations()) *
                          int64_t(trace.size()));
}
BENCHMARK(BM_Monitor)->Arg(1)->Arg(4);

void BM_Diagnose(benchmark::State& state) {
  sam::Scenario sc = scenario(1);
  std::vector<sam::Observation> trace = sam::generate(model(), sc);
  trace.resize(trace.size() / 2);  // truncated run compromises at the end
  for (auto _ : state) {
    benchmark::DoNotOptimize(sam::run_monitor(model(), trace));
  }
}
BENCHMARK(BM_Diagnose);

}  // namespace

BENCHMARK_MAIN();
