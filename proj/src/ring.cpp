#include "ssmlab/ring.hpp"

#include <cstdlib>
#include <string>

namespace ssmlab {

namespace {

std::string dim_str(int r, int c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_precision(Precision a, Precision b, const char* what) {
  if (a != b)
    throw MismatchError(std::string(what) + ": precision mismatch (" +
                        std::to_string(a.bits()) + " vs " + std::to_string(b.bits()) + ")");
}

}  // namespace

Precision::Precision(int bits) : bits_(bits) {
  if (bits < 1 || bits > 64)
    throw MismatchError("Precision: bits must be in [1, 64], got " + std::to_string(bits));
  mask_ = bits == 64 ? ~uint64_t{0} : (uint64_t{1} << bits) - 1;
}

uint64_t Precision::size() const {
  if (bits_ > 63) throw BudgetError("Precision: ring size 2^" + std::to_string(bits_) +
                                    " does not fit in uint64");
  return uint64_t{1} << bits_;
}

RingVector::RingVector(Precision p, std::vector<uint64_t> values)
    : prec_(p), v_(std::move(values)) {
  for (auto& x : v_) x = prec_.reduce(x);
}

RingVector RingVector::zero(int dim, Precision p) {
  return RingVector(p, std::vector<uint64_t>(size_t(dim), 0));
}

RingVector operator+(const RingVector& a, const RingVector& b) {
  require_same_precision(a.prec_, b.prec_, "vector add");
  if (a.dim() != b.dim())
    throw MismatchError("vector add: dimension mismatch (" + std::to_string(a.dim()) +
                        " vs " + std::to_string(b.dim()) + ")");
  std::vector<uint64_t> out(a.v_.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.prec_.add(a.v_[i], b.v_[i]);
  return RingVector(a.prec_, std::move(out));
}

bool operator==(const RingVector& a, const RingVector& b) {
  return a.prec_ == b.prec_ && a.v_ == b.v_;
}

RingMatrix::RingMatrix(Precision p, int rows, int cols, std::vector<uint64_t> values)
    : prec_(p), rows_(rows), cols_(cols), v_(std::move(values)) {
  if (rows < 0 || cols < 0 || v_.size() != size_t(rows) * size_t(cols))
    throw MismatchError("matrix: value count does not match shape " + dim_str(rows, cols));
  for (auto& x : v_) x = prec_.reduce(x);
}

RingMatrix RingMatrix::zero(int rows, int cols, Precision p) {
  return RingMatrix(p, rows, cols, std::vector<uint64_t>(size_t(rows) * size_t(cols), 0));
}

RingMatrix RingMatrix::identity(int dim, Precision p) {
  RingMatrix m = zero(dim, dim, p);
  for (int i = 0; i < dim; ++i) m.set(i, i, 1);
  return m;
}

RingMatrix RingMatrix::from_rows(Precision p, const std::vector<std::vector<uint64_t>>& rows) {
  const int r = int(rows.size());
  const int c = r == 0 ? 0 : int(rows[0].size());
  std::vector<uint64_t> flat;
  flat.reserve(size_t(r) * size_t(c));
  for (const auto& row : rows) {
    if (int(row.size()) != c) throw MismatchError("matrix: ragged row list");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return RingMatrix(p, r, c, std::move(flat));
}

RingMatrix operator*(const RingMatrix& a, const RingMatrix& b) {
  require_same_precision(a.prec_, b.prec_, "matrix multiply");
  if (a.cols_ != b.rows_)
    throw MismatchError("matrix multiply: " + dim_str(a.rows_, a.cols_) + " * " +
                        dim_str(b.rows_, b.cols_));
  RingMatrix out = RingMatrix::zero(a.rows_, b.cols_, a.prec_);
  for (int i = 0; i < a.rows_; ++i)
    for (int k = 0; k < a.cols_; ++k) {
      const uint64_t aik = a.at(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < b.cols_; ++j)
        out.set(i, j, out.at(i, j) + aik * b.at(k, j));
    }
  return out;
}

RingVector operator*(const RingMatrix& a, const RingVector& x) {
  require_same_precision(a.prec_, x.precision(), "matrix-vector multiply");
  if (a.cols_ != x.dim())
    throw MismatchError("matrix-vector multiply: " + dim_str(a.rows_, a.cols_) + " * vec(" +
                        std::to_string(x.dim()) + ")");
  std::vector<uint64_t> out(size_t(a.rows_), 0);
  for (int i = 0; i < a.rows_; ++i) {
    uint64_t acc = 0;
    for (int j = 0; j < a.cols_; ++j) acc += a.at(i, j) * x[size_t(j)];
    out[size_t(i)] = a.prec_.reduce(acc);
  }
  return RingVector(a.prec_, std::move(out));
}

RingMatrix operator+(const RingMatrix& a, const RingMatrix& b) {
  require_same_precision(a.prec_, b.prec_, "matrix add");
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
    throw MismatchError("matrix add: shape mismatch " + dim_str(a.rows_, a.cols_) + " vs " +
                        dim_str(b.rows_, b.cols_));
  std::vector<uint64_t> out(a.v_.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.prec_.add(a.v_[i], b.v_[i]);
  return RingMatrix(a.prec_, a.rows_, a.cols_, std::move(out));
}

bool operator==(const RingMatrix& a, const RingMatrix& b) {
  return a.prec_ == b.prec_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.v_ == b.v_;
}

AffineMap::AffineMap(RingMatrix a, RingVector bb) : A(std::move(a)), b(std::move(bb)) {
  if (A.rows() != A.cols())
    throw MismatchError("affine map: matrix must be square, got " +
                        dim_str(A.rows(), A.cols()));
  if (A.rows() != b.dim())
    throw MismatchError("affine map: matrix dim " + std::to_string(A.rows()) +
                        " vs offset dim " + std::to_string(b.dim()));
  require_same_precision(A.precision(), b.precision(), "affine map");
}

RingVector apply(const AffineMap& map, const RingVector& h) { return map.A * h + map.b; }

AffineMap compose(const AffineMap& t2, const AffineMap& t1) {
  return AffineMap(t2.A * t1.A, t2.A * t1.b + t2.b);
}

AffineMap identity_map(int dim, Precision p) {
  return AffineMap(RingMatrix::identity(dim, p), RingVector::zero(dim, p));
}

bool is_invertible(const RingMatrix& A) {
  if (A.rows() != A.cols()) return false;
  const int d = A.rows();
  // Gaussian elimination over F_2 on the mod-2 reduction; each row fits a
  // uint64 bitmask since d <= 64 in practice.
  if (d > 64) throw BudgetError("is_invertible: dimension too large");
  std::vector<uint64_t> rows(size_t(d), 0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (A.at(i, j) & 1u) rows[size_t(i)] |= uint64_t{1} << j;
  for (int col = 0; col < d; ++col) {
    int pivot = -1;
    for (int r = col; r < d; ++r)
      if ((rows[size_t(r)] >> col) & 1u) {
        pivot = r;
        break;
      }
    if (pivot < 0) return false;
    std::swap(rows[size_t(col)], rows[size_t(pivot)]);
    for (int r = 0; r < d; ++r)
      if (r != col && ((rows[size_t(r)] >> col) & 1u)) rows[size_t(r)] ^= rows[size_t(col)];
  }
  return true;
}

std::optional<uint64_t> permutation_order(const AffineMap& map, uint64_t max_iter) {
  if (!is_invertible(map.A)) return std::nullopt;
  const AffineMap id = identity_map(map.dim(), map.precision());
  AffineMap acc = map;
  uint64_t k = 1;
  while (acc != id) {
    acc = compose(map, acc);
    ++k;
    if (k > max_iter)
      throw BudgetError("permutation_order: exceeded iteration cap " + std::to_string(max_iter));
  }
  return k;
}

uint64_t state_space_size(int dim, Precision p) {
  const int total = dim * p.bits();
  if (total > 26)
    throw BudgetError("state space 2^" + std::to_string(total) + " exceeds pointwise cap 2^26");
  return uint64_t{1} << total;
}

uint64_t pack_state(const RingVector& v) {
  const int p = v.precision().bits();
  uint64_t idx = 0;
  for (int i = 0; i < v.dim(); ++i) {
    if (i > 0 && p >= 64) throw BudgetError("pack_state: state exceeds 64 bits");
    idx = (p >= 64 ? 0 : idx << p) | v[size_t(i)];
  }
  return idx;
}

RingVector unpack_state(uint64_t index, int dim, Precision p) {
  std::vector<uint64_t> vals(static_cast<size_t>(dim));
  for (int i = dim - 1; i >= 0; --i) {
    vals[size_t(i)] = index & p.mask();
    index = p.bits() >= 64 ? 0 : index >> p.bits();
  }
  return RingVector(p, std::move(vals));
}

std::vector<uint64_t> function_table(const AffineMap& map) {
  const uint64_t n = state_space_size(map.dim(), map.precision());
  std::vector<uint64_t> table(n);
  for (uint64_t i = 0; i < n; ++i)
    table[i] = pack_state(apply(map, unpack_state(i, map.dim(), map.precision())));
  return table;
}

bool same_function(const AffineMap& x, const AffineMap& y) {
  if (x.dim() != y.dim() || x.precision() != y.precision()) return false;
  const uint64_t n = state_space_size(x.dim(), x.precision());
  for (uint64_t i = 0; i < n; ++i) {
    const RingVector h = unpack_state(i, x.dim(), x.precision());
    if (apply(x, h) != apply(y, h)) return false;
  }
  return true;
}

size_t affine_bits(int dim, Precision p) {
  return size_t(dim) * size_t(dim + 1) * size_t(p.bits());
}

BitString serialize_affine(const AffineMap& map) {
  const int p = map.precision().bits();
  BitString out;
  for (int i = 0; i < map.dim(); ++i)
    for (int j = 0; j < map.dim(); ++j) out.append_field(map.A.at(i, j), p);
  for (int i = 0; i < map.dim(); ++i) out.append_field(map.b[size_t(i)], p);
  return out;
}

AffineMap deserialize_affine(const BitString& bits, size_t offset, int dim, Precision p) {
  if (offset + affine_bits(dim, p) > bits.size())
    throw MismatchError("deserialize_affine: payload too short");
  RingMatrix A = RingMatrix::zero(dim, dim, p);
  size_t pos = offset;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      A.set(i, j, bits.read_field(pos, p.bits()));
      pos += size_t(p.bits());
    }
  std::vector<uint64_t> b(static_cast<size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    b[size_t(i)] = bits.read_field(pos, p.bits());
    pos += size_t(p.bits());
  }
  return AffineMap(std::move(A), RingVector(p, std::move(b)));
}

AffineMapRange::AffineMapRange(int dim, Precision p, uint64_t budget)
    : dim_(dim), prec_(p) {
  if (dim < 1) throw MismatchError("AffineMapRange: dimension must be positive");
  const int exponent = p.bits() * (dim * dim + dim);
  if (exponent > 62)
    throw BudgetError("AffineMapRange: 2^" + std::to_string(exponent) +
                      " maps exceeds any enumeration budget");
  count_ = uint64_t{1} << exponent;
  if (count_ > budget)
    throw BudgetError("AffineMapRange: " + std::to_string(count_) +
                      " maps exceeds enumeration budget " + std::to_string(budget));
}

AffineMap AffineMapRange::at(uint64_t index) const {
  if (index >= count_) throw MismatchError("AffineMapRange: index out of range");
  const int p = prec_.bits();
  const int nparams = dim_ * dim_ + dim_;
  // Most significant digit first: A row-major, then b.
  std::vector<uint64_t> params(static_cast<size_t>(nparams));
  for (int k = nparams - 1; k >= 0; --k) {
    params[size_t(k)] = index & prec_.mask();
    index >>= p;
  }
  std::vector<uint64_t> a(params.begin(), params.begin() + dim_ * dim_);
  std::vector<uint64_t> b(params.begin() + dim_ * dim_, params.end());
  return AffineMap(RingMatrix(prec_, dim_, dim_, std::move(a)), RingVector(prec_, std::move(b)));
}

uint64_t default_budget() {
  if (const char* env = std::getenv("SSMLAB_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return uint64_t(v);
    throw ConfigError(std::string("SSMLAB_BUDGET: not a positive integer: ") + env);
  }
  return uint64_t{1} << 26;
}

}  // namespace ssmlab
