#include <set>
#include <string>

#include "doctest.h"
#include "ssmlab/errors.hpp"
#include "ssmlab/ring.hpp"
#include "ssmlab/rng.hpp"

using namespace ssmlab;

namespace {

AffineMap map1(uint64_t a, uint64_t b, int p) {
  const Precision prec(p);
  RingMatrix A = RingMatrix::zero(1, 1, prec);
  A.set(0, 0, a);
  return AffineMap{A, RingVector(prec, {b})};
}

}  // namespace

TEST_CASE("scalar wraparound") {
  const Precision p(3);
  CHECK(p.mask() == 7);
  CHECK(p.reduce(9) == 1);
  CHECK(p.add(6, 5) == 3);
  CHECK(p.mul(6, 3) == 2);
  const Precision p1(1);
  CHECK(p1.add(1, 1) == 0);
}

TEST_CASE("affine apply on width 1") {
  const RingVector h3(Precision(3), {3});
  CHECK(apply(map1(1, 1, 3), h3) == RingVector(Precision(3), {4}));
  const RingVector h7(Precision(3), {7});
  CHECK(apply(map1(0, 5, 3), h7) == RingVector(Precision(3), {5}));
}

TEST_CASE("affine apply swap-and-shift over two bits") {
  const Precision p(1);
  const RingMatrix A = RingMatrix::from_rows(p, {{0, 1}, {1, 0}});
  const AffineMap T{A, RingVector(p, {1, 1})};
  CHECK(apply(T, RingVector(p, {1, 0})) == RingVector(p, {1, 0}));
}

TEST_CASE("apply rejects mismatched operands") {
  CHECK_THROWS_AS(apply(map1(1, 0, 3), RingVector(Precision(2), {1})), MismatchError);
  CHECK_THROWS_AS(apply(map1(1, 0, 3), RingVector(Precision(3), {1, 2})), MismatchError);
}

TEST_CASE("compose is t2 after t1") {
  SUBCASE("constant map absorbs") {
    const AffineMap c = compose(map1(0, 2, 3), map1(1, 1, 3));
    CHECK(c.A.at(0, 0) == 0);
    CHECK(c.b[0] == 2);
  }
  SUBCASE("two-token product") {
    const AffineMap c = compose(map1(3, 1, 3), map1(2, 1, 3));
    CHECK(c.A.at(0, 0) == 6);
    CHECK(c.b[0] == 4);
    for (uint64_t h = 0; h < 8; ++h) {
      const RingVector v(Precision(3), {h});
      CHECK(apply(c, v) == apply(map1(3, 1, 3), apply(map1(2, 1, 3), v)));
    }
  }
  SUBCASE("identity is neutral") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
      RingMatrix A = RingMatrix::zero(2, 2, Precision(2));
      for (int r = 0; r < 2; ++r)
        for (int cc = 0; cc < 2; ++cc) A.set(r, cc, rng.bits(2));
      const AffineMap T{A, RingVector(Precision(2), {rng.bits(2), rng.bits(2)})};
      const AffineMap id = identity_map(2, Precision(2));
      const AffineMap c = compose(id, T);
      CHECK(c.A == T.A);
      CHECK(c.b == T.b);
      const AffineMap c2 = compose(T, id);
      CHECK(c2.A == T.A);
      CHECK(c2.b == T.b);
    }
  }
}

TEST_CASE("identity map parameters") {
  const AffineMap one = identity_map(1, Precision(3));
  CHECK(one.A.at(0, 0) == 1);
  CHECK(one.b[0] == 0);
  const AffineMap two = identity_map(2, Precision(1));
  CHECK(two.A == RingMatrix::identity(2, Precision(1)));
  CHECK(two.b == RingVector::zero(2, Precision(1)));
}

TEST_CASE("composition is associative") {
  Rng rng(202);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = int(rng.range(1, 3));
    const Precision p(int(rng.range(1, 4)));
    auto any = [&] {
      RingMatrix A = RingMatrix::zero(d, d, p);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) A.set(r, c, rng.bits(p.bits()));
      std::vector<uint64_t> b(static_cast<size_t>(d));
      for (auto& v : b) v = rng.bits(p.bits());
      return AffineMap{A, RingVector(p, std::move(b))};
    };
    const AffineMap t1 = any(), t2 = any(), t3 = any();
    const AffineMap left = compose(t3, compose(t2, t1));
    const AffineMap right = compose(compose(t3, t2), t1);
    REQUIRE(left.A == right.A);
    REQUIRE(left.b == right.b);
  }
}

TEST_CASE("apply and compose cohere on full state spaces") {
  auto exhaust = [](int d, int pbits) {
    const Precision p(pbits);
    const AffineMapRange range(d, p, default_budget());
    const uint64_t states = state_space_size(d, p);
    // Quadratic in the map count; keep to a deterministic stride for d=1.
    const uint64_t stride = range.size() > 64 ? 7 : 1;
    for (uint64_t i = 0; i < range.size(); i += stride)
      for (uint64_t j = 0; j < range.size(); j += stride) {
        const AffineMap a = range.at(i), b = range.at(j);
        const AffineMap c = compose(b, a);
        for (uint64_t s = 0; s < states; ++s) {
          const RingVector h = unpack_state(s, d, p);
          REQUIRE(apply(c, h) == apply(b, apply(a, h)));
        }
      }
  };
  exhaust(1, 1);
  exhaust(1, 2);
  exhaust(1, 3);
  exhaust(2, 1);
}

TEST_CASE("permutation orders") {
  CHECK(permutation_order(map1(1, 1, 3)) == 8);
  CHECK(permutation_order(identity_map(3, Precision(1))) == 1);
  SUBCASE("primitive companion matrix has order 7") {
    const Precision p(1);
    const RingMatrix companion = RingMatrix::from_rows(p, {{0, 0, 1}, {1, 0, 1}, {0, 1, 0}});
    CHECK(permutation_order(AffineMap{companion, RingVector::zero(3, p)}) == 7);
  }
  SUBCASE("non-permutations report as such") {
    CHECK_FALSE(permutation_order(map1(0, 3, 2)).has_value());
  }
  SUBCASE("the computed order is the first identity power") {
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
      RingMatrix A = RingMatrix::zero(2, 2, Precision(2));
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) A.set(r, c, rng.bits(2));
      const AffineMap T{A, RingVector(Precision(2), {rng.bits(2), rng.bits(2)})};
      const auto order = permutation_order(T);
      if (!order) continue;
      AffineMap power = identity_map(2, Precision(2));
      for (uint64_t k = 1; k <= *order; ++k) {
        power = compose(T, power);
        const bool is_id = same_function(power, identity_map(2, Precision(2)));
        REQUIRE(is_id == (k == *order));
      }
    }
  }
}

TEST_CASE("affine map enumeration") {
  CHECK(AffineMapRange(2, Precision(1), default_budget()).size() == 64);
  CHECK(AffineMapRange(1, Precision(2), default_budget()).size() == 16);
  CHECK(AffineMapRange(1, Precision(1), default_budget()).size() == 4);
  SUBCASE("no duplicate parameter pairs") {
    for (const auto& [d, pbits] : std::vector<std::pair<int, int>>{
             {1, 1}, {1, 2}, {1, 3}, {2, 1}, {3, 1}}) {
      const Precision p(pbits);
      const AffineMapRange range(d, p, default_budget());
      std::set<std::string> seen;
      for (uint64_t i = 0; i < range.size(); ++i)
        seen.insert(serialize_affine(range.at(i)).to_hex());
      REQUIRE(seen.size() == range.size());
    }
  }
  SUBCASE("budget guards the blowup") {
    CHECK_THROWS_AS(AffineMapRange(3, Precision(3), 1024), BudgetError);
  }
}

TEST_CASE("invertibility") {
  CHECK(is_invertible(RingMatrix::identity(2, Precision(3))));
  CHECK_FALSE(is_invertible(RingMatrix::zero(2, 2, Precision(3))));
  CHECK(is_invertible(RingMatrix::from_rows(Precision(1), {{1, 1}, {0, 1}})));
  // Even entries act like zero mod 2: [[2]] halves the state space.
  CHECK_FALSE(is_invertible(RingMatrix::from_rows(Precision(3), {{2}})));
}

TEST_CASE("state packing is a bijection") {
  const Precision p(2);
  std::set<uint64_t> seen;
  for (uint64_t idx = 0; idx < state_space_size(3, p); ++idx) {
    const RingVector v = unpack_state(idx, 3, p);
    CHECK(pack_state(v) == idx);
    seen.insert(idx);
  }
  CHECK(seen.size() == 64);
  // Entry 0 sits in the most significant block.
  CHECK(pack_state(RingVector(p, {1, 0, 0})) == 16);
  CHECK(pack_state(RingVector(p, {0, 0, 1})) == 1);
}

TEST_CASE("canonical affine serialization") {
  const AffineMap T = compose(map1(3, 1, 3), map1(2, 1, 3));  // (A=[6], b=[4])
  const BitString bits = serialize_affine(T);
  REQUIRE(bits.size() == affine_bits(1, Precision(3)));
  REQUIRE(bits.size() == 6);
  // 6 = 110, then 4 = 100, most significant bit first.
  const bool expect[6] = {true, true, false, true, false, false};
  for (size_t i = 0; i < 6; ++i) CHECK(bits.read_bit(i) == expect[i]);

  const AffineMap back = deserialize_affine(bits, 0, 1, Precision(3));
  CHECK(back.A == T.A);
  CHECK(back.b == T.b);

  SUBCASE("round trip at width 2") {
    Rng rng(5);
    const Precision p(2);
    for (int trial = 0; trial < 50; ++trial) {
      RingMatrix A = RingMatrix::zero(2, 2, p);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) A.set(r, c, rng.bits(2));
      const AffineMap T2{A, RingVector(p, {rng.bits(2), rng.bits(2)})};
      const BitString s = serialize_affine(T2);
      REQUIRE(s.size() == affine_bits(2, p));
      const AffineMap rt = deserialize_affine(s, 0, 2, p);
      REQUIRE(rt.A == T2.A);
      REQUIRE(rt.b == T2.b);
    }
  }
}

TEST_CASE("bit strings") {
  BitString s;
  CHECK(s.empty());
  s.append_bit(true);
  s.append_bit(false);
  s.append_bit(true);
  s.append_bit(true);
  CHECK(s.size() == 4);
  CHECK(s.read_field(0, 4) == 0b1011);
  BitString t;
  t.append_bit(true);
  CHECK_FALSE(s == t);
  t.append_bit(false);
  t.append_bit(true);
  t.append_bit(true);
  CHECK(s == t);
  CHECK(s.to_hex() == "b0");
}

TEST_CASE("rng determinism and rejection bounds") {
  Rng a(99), b(99);
  for (int i = 0; i < 200; ++i) {
    const uint64_t n = 1 + i % 17;
    const uint64_t va = a.below(n);
    CHECK(va == b.below(n));
    CHECK(va < n);
  }
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
