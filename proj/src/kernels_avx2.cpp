// AVX2 variants. Per-element arithmetic mirrors the scalar reference ops in
// the same order, so elementwise kernels are bit-identical to it; reductions
// differ only by summation order. Built with -ffp-contract=off so the scalar
// tail loops round exactly like the reference translation unit.

#include <immintrin.h>

#include <bit>
#include <limits>
#include <stdexcept>

#include "ljchain/kernels.hpp"
#include "ljchain/rng.hpp"

namespace ljchain::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

// low 64 bits of the lane-wise product a*b
inline __m256i mul64(__m256i a, __m256i b) {
  __m256i a_hi = _mm256_srli_epi64(a, 32);
  __m256i b_hi = _mm256_srli_epi64(b, 32);
  __m256i ll = _mm256_mul_epu32(a, b);
  __m256i lh = _mm256_mul_epu32(a, b_hi);
  __m256i hl = _mm256_mul_epu32(a_hi, b);
  __m256i cross = _mm256_add_epi64(lh, hl);
  return _mm256_add_epi64(ll, _mm256_slli_epi64(cross, 32));
}

inline __m256i mix64v(__m256i z) {
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
  z = mul64(z, _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ull)));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
  z = mul64(z, _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBull)));
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

inline __m256d lj126_u6v(__m256d sigma, __m256d z) {
  __m256d t = _mm256_div_pd(sigma, z);
  __m256d t2 = _mm256_mul_pd(t, t);
  __m256d t4 = _mm256_mul_pd(t2, t2);
  return _mm256_mul_pd(t4, t2);
}

inline double lj126_u6(double sigma, double z) {
  double t = sigma / z;
  double t2 = t * t;
  double t4 = t2 * t2;
  return t4 * t2;
}

}  // namespace

double sum_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_reciprocal_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_div_pd(one, _mm256_loadu_pd(&x[i])));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += 1.0 / x[i];
  return s;
}

namespace {

template <bool kMax>
MinLoc extreme_first(std::span<const double> x) {
  const std::size_t n = x.size();
  const double init =
      kMax ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  MinLoc best{init, 0};
  std::size_t i = 0;
  if (n >= 4) {
    __m256d bv = _mm256_set1_pd(init);
    __m256i bi = _mm256_setzero_si256();
    __m256i idx = _mm256_set_epi64x(3, 2, 1, 0);
    const __m256i four = _mm256_set1_epi64x(4);
    for (; i + 4 <= n; i += 4) {
      __m256d v = _mm256_loadu_pd(&x[i]);
      // strict compare keeps the first occurrence within each lane
      __m256d m = kMax ? _mm256_cmp_pd(v, bv, _CMP_GT_OQ) : _mm256_cmp_pd(v, bv, _CMP_LT_OQ);
      bv = _mm256_blendv_pd(bv, v, m);
      bi = _mm256_castpd_si256(
          _mm256_blendv_pd(_mm256_castsi256_pd(bi), _mm256_castsi256_pd(idx), m));
      idx = _mm256_add_epi64(idx, four);
    }
    alignas(32) double vals[4];
    alignas(32) std::uint64_t idxs[4];
    _mm256_store_pd(vals, bv);
    _mm256_store_si256(reinterpret_cast<__m256i*>(idxs), bi);
    best = {vals[0], static_cast<std::size_t>(idxs[0])};
    for (int lane = 1; lane < 4; ++lane) {
      bool better = kMax ? vals[lane] > best.value : vals[lane] < best.value;
      if (better || (vals[lane] == best.value && idxs[lane] < best.index)) {
        best = {vals[lane], static_cast<std::size_t>(idxs[lane])};
      }
    }
  }
  for (; i < n; ++i) {
    bool better = kMax ? x[i] > best.value : x[i] < best.value;
    if (better) best = {x[i], i};
  }
  return best;
}

}  // namespace

MinLoc min_first_avx2(std::span<const double> x) { return extreme_first<false>(x); }
MinLoc max_first_avx2(std::span<const double> x) { return extreme_first<true>(x); }

std::size_t count_lt_avx2(std::span<const double> x, double bound) {
  const std::size_t n = x.size();
  std::size_t i = 0, c = 0;
  const __m256d b = _mm256_set1_pd(bound);
  for (; i + 4 <= n; i += 4) {
    __m256d m = _mm256_cmp_pd(_mm256_loadu_pd(&x[i]), b, _CMP_LT_OQ);
    c += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(m))));
  }
  for (; i < n; ++i) c += (x[i] < bound) ? 1 : 0;
  return c;
}

void lj126_eval_avx2(int order, double eps, double sigma, std::span<const double> z,
                     std::span<double> out) {
  const std::size_t n = z.size();
  const __m256d ve = _mm256_set1_pd(eps);
  const __m256d vs = _mm256_set1_pd(sigma);
  std::size_t i = 0;
  switch (order) {
    case 0:
      for (; i + 4 <= n; i += 4) {
        __m256d zz = _mm256_loadu_pd(&z[i]);
        __m256d u = lj126_u6v(vs, zz);
        __m256d r = _mm256_mul_pd(ve, _mm256_mul_pd(u, _mm256_sub_pd(u, _mm256_set1_pd(2.0))));
        _mm256_storeu_pd(&out[i], r);
      }
      for (; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = eps * (u * (u - 2.0));
      }
      break;
    case 1:
      for (; i + 4 <= n; i += 4) {
        __m256d zz = _mm256_loadu_pd(&z[i]);
        __m256d u = lj126_u6v(vs, zz);
        __m256d num = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(12.0), ve),
                                    _mm256_mul_pd(u, _mm256_sub_pd(_mm256_set1_pd(1.0), u)));
        _mm256_storeu_pd(&out[i], _mm256_div_pd(num, zz));
      }
      for (; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = 12.0 * eps * (u * (1.0 - u)) / z[i];
      }
      break;
    case 2:
      for (; i + 4 <= n; i += 4) {
        __m256d zz = _mm256_loadu_pd(&z[i]);
        __m256d u = lj126_u6v(vs, zz);
        __m256d num = _mm256_mul_pd(
            _mm256_mul_pd(_mm256_set1_pd(12.0), ve),
            _mm256_mul_pd(u, _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(13.0), u),
                                           _mm256_set1_pd(7.0))));
        _mm256_storeu_pd(&out[i], _mm256_div_pd(num, _mm256_mul_pd(zz, zz)));
      }
      for (; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = 12.0 * eps * (u * (13.0 * u - 7.0)) / (z[i] * z[i]);
      }
      break;
    case 3:
      for (; i + 4 <= n; i += 4) {
        __m256d zz = _mm256_loadu_pd(&z[i]);
        __m256d u = lj126_u6v(vs, zz);
        __m256d num = _mm256_mul_pd(
            _mm256_mul_pd(_mm256_set1_pd(24.0), ve),
            _mm256_mul_pd(u, _mm256_sub_pd(_mm256_set1_pd(28.0),
                                           _mm256_mul_pd(_mm256_set1_pd(91.0), u))));
        _mm256_storeu_pd(&out[i], _mm256_div_pd(num, _mm256_mul_pd(_mm256_mul_pd(zz, zz), zz)));
      }
      for (; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = 24.0 * eps * (u * (28.0 - 91.0 * u)) / (z[i] * z[i] * z[i]);
      }
      break;
    default:
      throw std::invalid_argument("lj126_eval: order must be 0..3");
  }
}

EnergyAccum lj126_energy_avx2(std::span<const double> z, std::span<const double> eps,
                              std::span<const double> sigma, std::span<const double> well) {
  const std::size_t n = z.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  __m256d mn = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d zero = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d zz = _mm256_loadu_pd(&z[i]);
    if (_mm256_movemask_pd(_mm256_cmp_pd(zz, zero, _CMP_LE_OQ)) != 0) {
      return {std::numeric_limits<double>::infinity(), 0.0};
    }
    __m256d u = lj126_u6v(_mm256_loadu_pd(&sigma[i]), zz);
    __m256d term = _mm256_sub_pd(
        _mm256_mul_pd(_mm256_loadu_pd(&eps[i]),
                      _mm256_mul_pd(u, _mm256_sub_pd(u, _mm256_set1_pd(2.0)))),
        _mm256_loadu_pd(&well[i]));
    acc = _mm256_add_pd(acc, term);
    mn = _mm256_min_pd(mn, term);
  }
  double s = hsum(acc);
  alignas(32) double mv[4];
  _mm256_store_pd(mv, mn);
  double min_term = mv[0];
  for (int lane = 1; lane < 4; ++lane) min_term = mv[lane] < min_term ? mv[lane] : min_term;
  for (; i < n; ++i) {
    if (!(z[i] > 0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
    double u = lj126_u6(sigma[i], z[i]);
    double term = eps[i] * (u * (u - 2.0)) - well[i];
    s += term;
    if (term < min_term) min_term = term;
  }
  return {s, min_term};
}

void uniform_fill_avx2(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter0,
                       std::span<double> out) {
  const std::uint64_t key = rng::stream_key(seed, stream);
  const std::size_t n = out.size();
  std::size_t i = 0;
  const __m256i golden = _mm256_set1_epi64x(static_cast<long long>(rng::kGolden));
  const __m256i vkey = _mm256_set1_epi64x(static_cast<long long>(key));
  for (; i + 4 <= n; i += 4) {
    const std::uint64_t c = counter0 + i;
    __m256i ctr1 = _mm256_set_epi64x(static_cast<long long>(c + 4), static_cast<long long>(c + 3),
                                     static_cast<long long>(c + 2), static_cast<long long>(c + 1));
    __m256i bits = mix64v(_mm256_add_epi64(vkey, mul64(ctr1, golden)));
    bits = _mm256_srli_epi64(bits, 11);
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), bits);
    out[i + 0] = static_cast<double>(lanes[0]) * 0x1.0p-53;
    out[i + 1] = static_cast<double>(lanes[1]) * 0x1.0p-53;
    out[i + 2] = static_cast<double>(lanes[2]) * 0x1.0p-53;
    out[i + 3] = static_cast<double>(lanes[3]) * 0x1.0p-53;
  }
  for (; i < n; ++i) out[i] = rng::to_unit_double(rng::at(key, counter0 + i));
}

}  // namespace ljchain::kernels::detail
