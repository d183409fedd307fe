#include "ssmlab/algebra_checks.hpp"

#include <numeric>
#include <vector>

#include "ssmlab/errors.hpp"

namespace ssmlab {
namespace {

// All d x d matrices over F_2, as bit patterns row-major from the low bit.
RingMatrix f2_matrix_from_bits(uint64_t bits, int d) {
  RingMatrix a = RingMatrix::zero(d, d, Precision(1));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) a.set(r, c, (bits >> (r * d + c)) & 1);
  return a;
}

uint64_t pow2_checked(int exponent) {
  if (exponent < 0 || exponent >= 64) throw BudgetError("2^" + std::to_string(exponent) +
                                                        " does not fit a 64-bit count");
  return uint64_t{1} << exponent;
}

}  // namespace

std::set<uint64_t> OrderReport::support() const {
  std::set<uint64_t> out;
  for (const auto& [order, n] : histogram)
    if (n > 0) out.insert(order);
  return out;
}

uint64_t OrderReport::count(uint64_t order) const {
  const auto it = histogram.find(order);
  return it == histogram.end() ? 0 : it->second;
}

OrderReport affine_order_census(ExecMode mode) {
  const AffineMapRange range(3, Precision(1), default_budget());
  const auto orders = map_index<uint64_t>(
      range.size(),
      [&](uint64_t i) -> uint64_t {
        const AffineMap map = range.at(i);
        if (!is_invertible(map.A)) return 0;  // 0 marks "skip": orders are positive
        const auto order = permutation_order(map);
        if (!order) throw MismatchError("invertible affine map without a finite order");
        return *order;
      },
      mode);
  OrderReport report;
  for (const uint64_t order : orders) {
    if (order == 0) continue;
    ++report.total;
    ++report.histogram[order];
  }
  return report;
}

std::set<uint64_t> matrix_order_spectrum(int d) {
  if (d < 1 || d * d >= 26) throw BudgetError("matrix_order_spectrum: dimension too large");
  std::set<uint64_t> spectrum;
  const RingVector zero = RingVector::zero(d, Precision(1));
  for (uint64_t bits = 0; bits < (uint64_t{1} << (d * d)); ++bits) {
    const AffineMap map{f2_matrix_from_bits(bits, d), zero};
    if (!is_invertible(map.A)) continue;
    const auto order = permutation_order(map);
    if (!order) throw MismatchError("invertible matrix without a finite order");
    spectrum.insert(*order);
  }
  return spectrum;
}

UnipotentReport verify_unipotent_identity() {
  const Precision one(1);
  const int d = 3;
  const RingMatrix id = RingMatrix::identity(d, one);
  const RingMatrix zero = RingMatrix::zero(d, d, one);
  UnipotentReport report;
  for (uint64_t bits = 0; bits < (uint64_t{1} << (d * d)); ++bits) {
    const RingMatrix n = f2_matrix_from_bits(bits, d);
    if (!(n * n * n == zero)) continue;
    ++report.count;
    const RingMatrix a = id + n;
    const RingMatrix geo = id + a + a * a + a * a * a;
    if (!(geo == zero)) report.geometric_sum_vanishes = false;
    for (uint64_t bbits = 0; bbits < 8; ++bbits) {
      const AffineMap f{a, unpack_state(bbits, d, one)};
      const AffineMap f4 = compose(compose(f, f), compose(f, f));
      if (!same_function(f4, identity_map(d, one))) report.fourth_power_identity = false;
    }
  }
  return report;
}

CountingReport verify_affine_counting(int width, int prec, uint64_t budget) {
  if (width < 1 || prec < 1) throw BudgetError("verify_affine_counting: bad arguments");
  CountingReport report;
  report.width = width;
  report.prec = prec;
  report.param_wide = pow2_checked(prec * (width * width + width));
  report.param_narrow = pow2_checked(2 * prec * width);
  if (report.param_wide > budget || report.param_narrow > budget)
    throw BudgetError("verify_affine_counting: enumeration exceeds budget");

  std::set<std::vector<uint64_t>> wide;
  const AffineMapRange wide_range(width, Precision(prec), budget);
  for (uint64_t i = 0; i < wide_range.size(); ++i)
    wide.insert(function_table(wide_range.at(i)));
  report.functions_wide = wide.size();

  std::set<std::vector<uint64_t>> narrow;
  const AffineMapRange narrow_range(1, Precision(prec * width), budget);
  for (uint64_t i = 0; i < narrow_range.size(); ++i)
    narrow.insert(function_table(narrow_range.at(i)));
  report.functions_narrow = narrow.size();

  report.counts_match = report.functions_wide == report.param_wide &&
                        report.functions_narrow == report.param_narrow;
  report.strict = report.functions_wide > report.functions_narrow;
  return report;
}

PigeonholeReport verify_injectivity_pigeonhole(int width, int prec, uint64_t budget) {
  PigeonholeReport report;
  report.width = width;
  report.prec = prec;
  report.needed = pow2_checked(prec * (width * width + width));
  report.available = pow2_checked(2 * prec * width);
  report.certificate = report.needed > report.available;

  const AffineMapRange range(width, Precision(prec), budget);
  std::vector<std::vector<uint64_t>> tables;
  tables.reserve(range.size());
  for (uint64_t i = 0; i < range.size(); ++i) tables.push_back(function_table(range.at(i)));

  report.all_pairs_distinct = true;
  bool example_set = false;
  for (size_t i = 0; i < tables.size(); ++i) {
    for (size_t j = i + 1; j < tables.size(); ++j) {
      ++report.pairs_checked;
      bool witnessed = false;
      for (size_t x = 0; x < tables[i].size(); ++x) {
        if (tables[i][x] != tables[j][x]) {
          witnessed = true;
          if (!example_set) {
            example_set = true;
            report.example_first = i;
            report.example_second = j;
            report.example_point = x;
          }
          break;
        }
      }
      if (!witnessed) report.all_pairs_distinct = false;
    }
  }
  return report;
}

std::optional<uint64_t> pointwise_order(const AffineMap& map) {
  const std::vector<uint64_t> table = function_table(map);
  std::vector<bool> hit(table.size(), false);
  for (const uint64_t v : table) {
    if (v >= table.size() || hit[v]) return std::nullopt;
    hit[v] = true;
  }
  std::vector<bool> seen(table.size(), false);
  uint64_t order = 1;
  for (size_t start = 0; start < table.size(); ++start) {
    if (seen[start]) continue;
    uint64_t len = 0;
    size_t x = start;
    do {
      seen[x] = true;
      x = size_t(table[x]);
      ++len;
    } while (x != start);
    order = std::lcm(order, len);
  }
  return order;
}

bool confirm_order_by_reapplication(const AffineMap& map, uint64_t order) {
  if (order == 0) return false;
  const std::vector<uint64_t> table = function_table(map);
  std::vector<uint64_t> power(table.size());
  for (size_t x = 0; x < power.size(); ++x) power[x] = uint64_t(x);
  for (uint64_t k = 1; k <= order; ++k) {
    for (size_t x = 0; x < power.size(); ++x) power[x] = table[size_t(power[x])];
    bool is_identity = true;
    for (size_t x = 0; x < power.size(); ++x)
      if (power[x] != uint64_t(x)) {
        is_identity = false;
        break;
      }
    if (is_identity != (k == order)) return false;
  }
  return true;
}

}  // namespace ssmlab
