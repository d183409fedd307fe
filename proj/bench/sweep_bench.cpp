// Times the serial reference sweeps against the OpenMP path and confirms
// both produce identical results. Run manually; not part of ctest.

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "ssmlab/algebra_checks.hpp"
#include "ssmlab/composition.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/ssm.hpp"
#include "ssmlab/sweep.hpp"

using namespace ssmlab;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool match) {
  std::cout << std::left << std::setw(28) << name << std::right << std::fixed
            << std::setprecision(1) << std::setw(10) << serial_ms << " ms" << std::setw(10)
            << parallel_ms << " ms" << std::setw(8) << std::setprecision(2)
            << (parallel_ms > 0 ? serial_ms / parallel_ms : 0.0) << "x   "
            << (match ? "match" : "MISMATCH") << "\n";
}

// Exhaustive composition sweep: machine output vs direct evaluation.
std::pair<uint64_t, std::vector<uint64_t>> composition_sweep(int n, int k, ExecMode mode) {
  const uint64_t total = exhaustive_instance_count(n, k, default_budget());
  return count_failures(
      total,
      [n, k](uint64_t index) {
        const CompositionInstance inst = instance_at(n, k, index);
        const SSMachine machine = build_composition_ssm(n, k);
        const RunTrace trace = ssm_run(machine, encode_row_major(inst).raw());
        return trace.final_output->payload[0] == eval_composition(inst).value;
      },
      mode);
}

}  // namespace

int main() {
  std::cout << "threads available: " << max_threads() << "\n\n";
  std::cout << std::left << std::setw(28) << "kernel" << std::right << std::setw(13) << "serial"
            << std::setw(13) << "parallel" << std::setw(9) << "speedup"
            << "   results\n";

  {
    auto t0 = Clock::now();
    const OrderReport serial = affine_order_census(ExecMode::Serial);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const OrderReport parallel = affine_order_census(ExecMode::Parallel);
    const double parallel_ms = ms_since(t0);
    report("affine order census", serial_ms, parallel_ms,
           serial.histogram == parallel.histogram && serial.total == parallel.total);
  }

  {
    auto t0 = Clock::now();
    const auto serial = composition_sweep(3, 3, ExecMode::Serial);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel = composition_sweep(3, 3, ExecMode::Parallel);
    const double parallel_ms = ms_since(t0);
    report("composition N=3 K=3", serial_ms, parallel_ms,
           serial.first == 0 && parallel.first == 0 && serial.second == parallel.second);
  }

  {
    // Pure index kernel as a scheduling baseline.
    auto kernel = [](uint64_t i) {
      uint64_t h = i;
      for (int r = 0; r < 2000; ++r) h = h * 6364136223846793005ull + 1442695040888963407ull;
      return h;
    };
    auto t0 = Clock::now();
    const auto serial = map_index<uint64_t>(1 << 15, kernel, ExecMode::Serial);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel = map_index<uint64_t>(1 << 15, kernel, ExecMode::Parallel);
    const double parallel_ms = ms_since(t0);
    report("lcg scramble 32k x 2000", serial_ms, parallel_ms, serial == parallel);
  }

  return 0;
}
