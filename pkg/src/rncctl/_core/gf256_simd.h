/* dst ^= c * src over GF(2^8), split-nibble shuffle tables with AVX2/SSSE3
   paths chosen at run time and a scalar tail/fallback. */
#ifndef RNCCTL_GF256_SIMD_H
#define RNCCTL_GF256_SIMD_H

#include <stddef.h>
#include <stdint.h>
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
#define RNCCTL_X86 1
#include <immintrin.h>
#endif

static void gf_axpy_scalar(uint8_t *dst, const uint8_t *src, size_t n,
                           const uint8_t *tab)
{
    for (size_t k = 0; k < n; k++)
        dst[k] ^= tab[src[k]];
}

#ifdef RNCCTL_X86
__attribute__((target("avx2")))
static void gf_axpy_avx2(uint8_t *dst, const uint8_t *src, size_t n,
                         const uint8_t *lo, const uint8_t *hi, const uint8_t *tab)
{
    const __m256i tlo = _mm256_broadcastsi128_si256(_mm_loadu_si128((const __m128i *)lo));
    const __m256i thi = _mm256_broadcastsi128_si256(_mm_loadu_si128((const __m128i *)hi));
    const __m256i mask = _mm256_set1_epi8(0x0f);
    size_t k = 0;
    for (; k + 32 <= n; k += 32) {
        __m256i s = _mm256_loadu_si256((const __m256i *)(src + k));
        __m256i d = _mm256_loadu_si256((const __m256i *)(dst + k));
        __m256i l = _mm256_shuffle_epi8(tlo, _mm256_and_si256(s, mask));
        __m256i h = _mm256_shuffle_epi8(thi, _mm256_and_si256(_mm256_srli_epi64(s, 4), mask));
        d = _mm256_xor_si256(d, _mm256_xor_si256(l, h));
        _mm256_storeu_si256((__m256i *)(dst + k), d);
    }
    gf_axpy_scalar(dst + k, src + k, n - k, tab);
}

__attribute__((target("ssse3")))
static void gf_axpy_ssse3(uint8_t *dst, const uint8_t *src, size_t n,
                          const uint8_t *lo, const uint8_t *hi, const uint8_t *tab)
{
    const __m128i tlo = _mm_loadu_si128((const __m128i *)lo);
    const __m128i thi = _mm_loadu_si128((const __m128i *)hi);
    const __m128i mask = _mm_set1_epi8(0x0f);
    size_t k = 0;
    for (; k + 16 <= n; k += 16) {
        __m128i s = _mm_loadu_si128((const __m128i *)(src + k));
        __m128i d = _mm_loadu_si128((const __m128i *)(dst + k));
        __m128i l = _mm_shuffle_epi8(tlo, _mm_and_si128(s, mask));
        __m128i h = _mm_shuffle_epi8(thi, _mm_and_si128(_mm_srli_epi64(s, 4), mask));
        d = _mm_xor_si128(d, _mm_xor_si128(l, h));
        _mm_storeu_si128((__m128i *)(dst + k), d);
    }
    gf_axpy_scalar(dst + k, src + k, n - k, tab);
}
#endif

/* 0 = scalar, 1 = ssse3, 2 = avx2 */
static int gf_simd_level(void)
{
#ifdef RNCCTL_X86
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2"))
        return 2;
    if (__builtin_cpu_supports("ssse3"))
        return 1;
#endif
    return 0;
}

static inline void gf_axpy(int level, uint8_t *dst, const uint8_t *src, size_t n,
                           const uint8_t *lo, const uint8_t *hi, const uint8_t *tab)
{
#ifdef RNCCTL_X86
    if (level == 2) { gf_axpy_avx2(dst, src, n, lo, hi, tab); return; }
    if (level == 1) { gf_axpy_ssse3(dst, src, n, lo, hi, tab); return; }
#endif
    gf_axpy_scalar(dst, src, n, tab);
}

#endif
