#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssmlab/bits.hpp"
#include "ssmlab/errors.hpp"

namespace ssmlab {

// Scalars live in Z/2^p. Values are kept reduced; uint64 arithmetic wraps
// mod 2^64, so masking the wrapped result is exact for every p <= 64.
class Precision {
 public:
  explicit Precision(int bits);

  int bits() const { return bits_; }
  uint64_t mask() const { return mask_; }
  uint64_t reduce(uint64_t x) const { return x & mask_; }
  uint64_t add(uint64_t a, uint64_t b) const { return (a + b) & mask_; }
  uint64_t mul(uint64_t a, uint64_t b) const { return (a * b) & mask_; }

  // Ring size 2^p. Requires p <= 63 so the count fits in uint64.
  uint64_t size() const;

  friend bool operator==(Precision a, Precision b) { return a.bits_ == b.bits_; }
  friend bool operator!=(Precision a, Precision b) { return a.bits_ != b.bits_; }

 private:
  int bits_;
  uint64_t mask_;
};

class RingVector {
 public:
  RingVector(Precision p, std::vector<uint64_t> values);
  static RingVector zero(int dim, Precision p);

  Precision precision() const { return prec_; }
  int dim() const { return int(v_.size()); }
  uint64_t operator[](size_t i) const { return v_[i]; }
  void set(size_t i, uint64_t value) { v_[i] = prec_.reduce(value); }
  const std::vector<uint64_t>& values() const { return v_; }

  friend RingVector operator+(const RingVector& a, const RingVector& b);
  friend bool operator==(const RingVector& a, const RingVector& b);
  friend bool operator!=(const RingVector& a, const RingVector& b) { return !(a == b); }

 private:
  Precision prec_;
  std::vector<uint64_t> v_;
};

// Dense row-major matrix over Z/2^p.
class RingMatrix {
 public:
  RingMatrix(Precision p, int rows, int cols, std::vector<uint64_t> values);
  static RingMatrix zero(int rows, int cols, Precision p);
  static RingMatrix identity(int dim, Precision p);
  static RingMatrix from_rows(Precision p, const std::vector<std::vector<uint64_t>>& rows);

  Precision precision() const { return prec_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  uint64_t at(int r, int c) const { return v_[size_t(r) * cols_ + c]; }
  void set(int r, int c, uint64_t value) { v_[size_t(r) * cols_ + c] = prec_.reduce(value); }
  const std::vector<uint64_t>& values() const { return v_; }

  friend RingMatrix operator*(const RingMatrix& a, const RingMatrix& b);
  friend RingVector operator*(const RingMatrix& a, const RingVector& x);
  friend RingMatrix operator+(const RingMatrix& a, const RingMatrix& b);
  friend bool operator==(const RingMatrix& a, const RingMatrix& b);
  friend bool operator!=(const RingMatrix& a, const RingMatrix& b) { return !(a == b); }

 private:
  Precision prec_;
  int rows_, cols_;
  std::vector<uint64_t> v_;
};

// h |-> A h + b on (Z/2^p)^d. Parameters identify the function: b = f(0)
// and the columns of A are f(e_j) - f(0), so parameter equality is
// function equality over these rings.
struct AffineMap {
  RingMatrix A;
  RingVector b;

  AffineMap(RingMatrix a, RingVector bb);
  int dim() const { return A.rows(); }
  Precision precision() const { return A.precision(); }

  friend bool operator==(const AffineMap& x, const AffineMap& y) {
    return x.A == y.A && x.b == y.b;
  }
  friend bool operator!=(const AffineMap& x, const AffineMap& y) { return !(x == y); }
};

RingVector apply(const AffineMap& map, const RingVector& h);

// compose(t2, t1) is t2 after t1: (A2 A1, A2 b1 + b2).
AffineMap compose(const AffineMap& t2, const AffineMap& t1);

AffineMap identity_map(int dim, Precision p);

// True iff h |-> A h is a bijection. Over Z/2^p that holds exactly when
// det(A) is odd, i.e. when A mod 2 is invertible over F_2.
bool is_invertible(const RingMatrix& A);

// Smallest k >= 1 with map^k = identity, computed by iterated parameter
// composition; nullopt when the map is not a permutation. max_iter guards
// against misuse on large groups.
std::optional<uint64_t> permutation_order(const AffineMap& map,
                                          uint64_t max_iter = uint64_t{1} << 20);

// State packing for pointwise work: vector <-> index in [0, 2^{d p}),
// entry 0 in the most significant block.
uint64_t pack_state(const RingVector& v);
RingVector unpack_state(uint64_t index, int dim, Precision p);
uint64_t state_space_size(int dim, Precision p);

// table[packed input] = packed output over the full state space.
// Requires d*p <= 26 to bound the table.
std::vector<uint64_t> function_table(const AffineMap& map);

// Pointwise comparison over the full state space (same bound as above).
bool same_function(const AffineMap& x, const AffineMap& y);

// Canonical bit serialization: row-major entries of A, then entries of b,
// each an unsigned p-bit field, most significant bit first. Length is
// exactly (d^2 + d) * p bits.
BitString serialize_affine(const AffineMap& map);
AffineMap deserialize_affine(const BitString& bits, size_t offset, int dim, Precision p);
size_t affine_bits(int dim, Precision p);

// Index-addressable enumeration of all 2^{p (d^2 + d)} affine maps on
// (Z/2^p)^d. Index digits are base-2^p parameters, A row-major first, then
// b, most significant digit first. Construction fails if the count
// exceeds the budget.
class AffineMapRange {
 public:
  AffineMapRange(int dim, Precision p, uint64_t budget);

  uint64_t size() const { return count_; }
  AffineMap at(uint64_t index) const;

 private:
  int dim_;
  Precision prec_;
  uint64_t count_;
};

// Enumeration budget: SSMLAB_BUDGET from the environment, else 2^26.
uint64_t default_budget();

}  // namespace ssmlab
