#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "ssmlab/ring.hpp"
#include "ssmlab/sweep.hpp"

namespace ssmlab {

struct OrderReport {
  uint64_t total = 0;                         // invertible maps enumerated
  std::map<uint64_t, uint64_t> histogram;     // order -> count
  std::set<uint64_t> support() const;
  uint64_t count(uint64_t order) const;       // 0 when absent
};

// Enumerates every invertible affine map on F_2^3 (all A in GL(3,2), all b)
// and tallies permutation orders.
OrderReport affine_order_census(ExecMode mode = ExecMode::Serial);

// Multiplicative orders appearing in GL(d, 2).
std::set<uint64_t> matrix_order_spectrum(int d);

struct UnipotentReport {
  uint64_t count = 0;                  // unipotent I + N with N^3 = 0
  bool geometric_sum_vanishes = true;  // I + A + A^2 + A^3 = 0 for each
  bool fourth_power_identity = true;   // (A, b)^4 = id for every offset b
};

// Checks the unipotent branch of the order analysis over F_2^3.
UnipotentReport verify_unipotent_identity();

struct CountingReport {
  int width = 0;
  int prec = 0;
  uint64_t functions_wide = 0;   // distinct h -> Ah + b at width w, precision p
  uint64_t param_wide = 0;       // 2^{p(w^2+w)}
  uint64_t functions_narrow = 0; // distinct maps at width 1, precision p*w
  uint64_t param_narrow = 0;     // 2^{2pw}
  bool counts_match = false;     // function counts equal parameter counts
  bool strict = false;           // wide side strictly larger
};

// Counts distinct affine functions on both sides of the width/precision
// trade by exhaustive enumeration of parameters.
CountingReport verify_affine_counting(int width, int prec, uint64_t budget = default_budget());

struct PigeonholeReport {
  int width = 0;
  int prec = 0;
  uint64_t needed = 0;     // 2^{p(w^2+w)} distinct functions demanded
  uint64_t available = 0;  // 2^{2pw} scalar maps available
  bool certificate = false;          // needed > available
  bool all_pairs_distinct = false;   // every pair of maps separated by a witness
  uint64_t pairs_checked = 0;
  // First separated pair, as enumeration indices plus the witness point.
  uint64_t example_first = 0;
  uint64_t example_second = 0;
  uint64_t example_point = 0;  // packed state where the two maps differ
};

// Demonstrates that distinct parameters give distinct functions (witness
// per pair) and reports the counting certificate.
PigeonholeReport verify_injectivity_pigeonhole(int width, int prec,
                                               uint64_t budget = default_budget());

// Order oracle independent of map composition: cycle-length lcm of the
// function table. Returns nullopt when the map is not a bijection.
std::optional<uint64_t> pointwise_order(const AffineMap& map);

// Re-applies the table order times: identity exactly at `order`, never before.
bool confirm_order_by_reapplication(const AffineMap& map, uint64_t order);

}  // namespace ssmlab
