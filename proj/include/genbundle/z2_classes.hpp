#pragma once

// Mod-2 cohomology of real projective space, H*(RP^n; Z2) = Z2[a]/(a^(n+1)),
// and the Stiefel-Whitney obstruction computations built on it.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace genbundle {

/// Truncated polynomial over Z2 in one generator `a`, stored as a fixed-width
/// bitset. Bit k holds the coefficient of a^k; bits above the truncation
/// degree are always zero.
template <std::size_t MaxDegree = 1024>
class BasicZ2Poly {
  public:
    static constexpr std::size_t max_degree = MaxDegree;
    static constexpr std::size_t word_bits = 64;
    static constexpr std::size_t word_count = (MaxDegree + 1 + word_bits - 1) / word_bits;

    explicit BasicZ2Poly(std::size_t truncation_degree) : degree_(truncation_degree) {
        if (truncation_degree > MaxDegree) {
            throw std::domain_error("Z2Poly: truncation degree " + std::to_string(truncation_degree) +
                                    " exceeds the maximum " + std::to_string(MaxDegree));
        }
    }

    static BasicZ2Poly one(std::size_t truncation_degree) {
        BasicZ2Poly p(truncation_degree);
        p.set(0, true);
        return p;
    }

    /// 1 + a^k (just 1 when k is truncated away).
    static BasicZ2Poly one_plus_power(std::size_t truncation_degree, std::size_t k) {
        BasicZ2Poly p = one(truncation_degree);
        if (k <= truncation_degree) p.set(k, !p.coeff(k));
        return p;
    }

    static BasicZ2Poly from_coefficients(std::size_t truncation_degree, const std::vector<int>& coeffs) {
        BasicZ2Poly p(truncation_degree);
        for (std::size_t k = 0; k < coeffs.size() && k <= truncation_degree; ++k) p.set(k, (coeffs[k] & 1) != 0);
        return p;
    }

    std::size_t truncation_degree() const noexcept { return degree_; }

    bool coeff(std::size_t k) const noexcept {
        if (k > degree_) return false;
        return ((words_[k / word_bits] >> (k % word_bits)) & 1u) != 0;
    }

    void set(std::size_t k, bool bit) {
        if (k > degree_) throw std::out_of_range("Z2Poly: degree " + std::to_string(k) + " is truncated");
        const std::uint64_t mask = std::uint64_t{1} << (k % word_bits);
        if (bit)
            words_[k / word_bits] |= mask;
        else
            words_[k / word_bits] &= ~mask;
    }

    bool is_one() const noexcept { return *this == one(degree_); }

    /// Lowest positive degree with a nonzero coefficient.
    std::optional<std::size_t> lowest_positive_term() const noexcept {
        for (std::size_t k = 1; k <= degree_; ++k)
            if (coeff(k)) return k;
        return std::nullopt;
    }

    std::vector<std::size_t> support() const {
        std::vector<std::size_t> out;
        for (std::size_t w = 0; w < word_count; ++w) {
            std::uint64_t bits = words_[w];
            while (bits != 0) {
                const int b = std::countr_zero(bits);
                out.push_back(w * word_bits + static_cast<std::size_t>(b));
                bits &= bits - 1;
            }
        }
        return out;
    }

    friend bool operator==(const BasicZ2Poly& lhs, const BasicZ2Poly& rhs) noexcept {
        return lhs.degree_ == rhs.degree_ && lhs.words_ == rhs.words_;
    }

    BasicZ2Poly& operator+=(const BasicZ2Poly& rhs) {
        require_same_degree(rhs);
        for (std::size_t w = 0; w < word_count; ++w) words_[w] ^= rhs.words_[w];
        return *this;
    }

    friend BasicZ2Poly operator+(BasicZ2Poly lhs, const BasicZ2Poly& rhs) { return lhs += rhs; }

    /// Product in Z2[a]/(a^(n+1)): XOR of shifted copies of `rhs`, one per set
    /// bit of `lhs`.
    friend BasicZ2Poly operator*(const BasicZ2Poly& lhs, const BasicZ2Poly& rhs) {
        lhs.require_same_degree(rhs);
        BasicZ2Poly out(lhs.degree_);
        for (std::size_t i : lhs.support()) out.xor_shifted(rhs, i);
        out.clear_above_degree();
        return out;
    }

    BasicZ2Poly& operator*=(const BasicZ2Poly& rhs) { return *this = *this * rhs; }

    /// "1 + a + a^3" style; the zero polynomial prints as "0".
    std::string to_string() const {
        std::ostringstream os;
        bool first = true;
        for (std::size_t k : support()) {
            if (!first) os << " + ";
            first = false;
            if (k == 0)
                os << '1';
            else if (k == 1)
                os << 'a';
            else
                os << "a^" << k;
        }
        if (first) os << '0';
        return os.str();
    }

    /// Little-endian hex bitmask: byte j carries coefficients of a^(8j)..a^(8j+7),
    /// least significant bit first; ceil((n+1)/8) bytes.
    std::string to_hex_le() const {
        static constexpr char digits[] = "0123456789abcdef";
        const std::size_t bytes = (degree_ + 1 + 7) / 8;
        std::string out;
        out.reserve(2 * bytes);
        for (std::size_t j = 0; j < bytes; ++j) {
            const auto byte = static_cast<unsigned>((words_[j / 8] >> (8 * (j % 8))) & 0xffu);
            out.push_back(digits[byte >> 4]);
            out.push_back(digits[byte & 0xfu]);
        }
        return out;
    }

    static BasicZ2Poly from_hex_le(std::size_t truncation_degree, const std::string& hex) {
        BasicZ2Poly p(truncation_degree);
        if (hex.size() != 2 * ((truncation_degree + 1 + 7) / 8))
            throw std::invalid_argument("Z2Poly: hex mask has wrong length for degree " +
                                        std::to_string(truncation_degree));
        auto nibble = [](char c) -> unsigned {
            if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
            throw std::invalid_argument(std::string("Z2Poly: bad hex digit '") + c + "'");
        };
        for (std::size_t j = 0; 2 * j < hex.size(); ++j) {
            const std::uint64_t byte = (nibble(hex[2 * j]) << 4) | nibble(hex[2 * j + 1]);
            p.words_[j / 8] |= byte << (8 * (j % 8));
        }
        BasicZ2Poly clipped = p;
        clipped.clear_above_degree();
        if (clipped.words_ != p.words_)
            throw std::invalid_argument("Z2Poly: hex mask sets bits above the truncation degree");
        return p;
    }

  private:
    void require_same_degree(const BasicZ2Poly& rhs) const {
        if (degree_ != rhs.degree_) {
            throw std::domain_error("Z2Poly: mismatched truncation degrees " + std::to_string(degree_) + " and " +
                                    std::to_string(rhs.degree_));
        }
    }

    void xor_shifted(const BasicZ2Poly& src, std::size_t shift) {
        const std::size_t word_shift = shift / word_bits;
        const std::size_t bit_shift = shift % word_bits;
        for (std::size_t w = word_count; w-- > word_shift;) {
            const std::size_t s = w - word_shift;
            std::uint64_t v = src.words_[s] << bit_shift;
            if (bit_shift != 0 && s > 0) v |= src.words_[s - 1] >> (word_bits - bit_shift);
            words_[w] ^= v;
        }
    }

    void clear_above_degree() {
        const std::size_t top = degree_ + 1;
        for (std::size_t w = 0; w < word_count; ++w) {
            const std::size_t lo = w * word_bits;
            if (lo >= top)
                words_[w] = 0;
            else if (top - lo < word_bits)
                words_[w] &= (std::uint64_t{1} << (top - lo)) - 1;
        }
    }

    std::size_t degree_;
    std::array<std::uint64_t, word_count> words_{};
};

using Z2Poly = BasicZ2Poly<>;

inline constexpr std::size_t max_rp_dimension = Z2Poly::max_degree;

template <std::size_t D>
BasicZ2Poly<D> poly_mul(const BasicZ2Poly<D>& p, const BasicZ2Poly<D>& q) {
    return p * q;
}

/// e-fold product by repeated squaring; p^0 = 1.
template <std::size_t D>
BasicZ2Poly<D> poly_pow(BasicZ2Poly<D> base, std::uint64_t e) {
    auto result = BasicZ2Poly<D>::one(base.truncation_degree());
    while (e != 0) {
        if (e & 1u) result *= base;
        e >>= 1;
        if (e != 0) base *= base;
    }
    return result;
}

/// C(n, k) mod 2 by Lucas' theorem: odd iff the bits of k are a subset of n's.
constexpr bool binom_mod2(std::uint64_t n, std::uint64_t k) noexcept { return (k & n) == k; }

namespace detail {
inline void check_rp_dimension(std::size_t n) {
    if (n > max_rp_dimension)
        throw std::domain_error("RP^n: dimension " + std::to_string(n) + " exceeds " +
                                std::to_string(max_rp_dimension));
}
}  // namespace detail

/// w(T RP^n) = (1 + a)^(n+1) in H*(RP^n; Z2). RP^0 is a point: w = 1.
inline Z2Poly sw_tangent_rpn(std::size_t n) {
    detail::check_rp_dimension(n);
    if (n == 0) return Z2Poly::one(0);
    return poly_pow(Z2Poly::one_plus_power(n, 1), n + 1);
}

/// w(TT RP^n) = w(T RP^n) w(T* RP^n) = w(T RP^n)^2.
inline Z2Poly sw_gen_tangent_rpn(std::size_t n) {
    const Z2Poly tangent = sw_tangent_rpn(n);
    // T* RP^n is isomorphic to T RP^n, so its total class is the same element.
    const Z2Poly& cotangent = tangent;
    return tangent * cotangent;
}

inline bool obstruction_trivial(std::size_t n) { return sw_gen_tangent_rpn(n).is_one(); }

constexpr bool is_power_of_two(std::uint64_t x) noexcept { return std::has_single_bit(x); }

/// Smallest integer r with r >= k + k/(m-k), by exact integer ceiling.
inline std::uint64_t allard_min_copies(std::uint64_t k, std::uint64_t m) {
    if (k < 1) throw std::domain_error("allard_min_copies: the trivial summand rank k must be >= 1");
    if (m <= k)
        throw std::domain_error("allard_min_copies: total rank m=" + std::to_string(m) +
                                " must exceed k=" + std::to_string(k));
    const std::uint64_t d = m - k;
    return k + (k + d - 1) / d;
}

enum class Tristate { yes, no, undecided };

inline const char* to_string(Tristate t) noexcept {
    switch (t) {
        case Tristate::yes: return "yes";
        case Tristate::no: return "no";
        case Tristate::undecided: return "undecided";
    }
    return "?";
}

/// S^n and RP^n are parallelizable exactly for these dimensions (a lookup,
/// not something the Z2 classes can decide).
inline bool parallelizable_dimension(std::size_t n) noexcept { return n == 1 || n == 3 || n == 7; }

struct SwClassification {
    std::size_t n = 0;
    Z2Poly tangent_sw{0};
    Z2Poly gen_sw{0};
    bool obstruction_trivial = true;
    Tristate parallelizable_known = Tristate::undecided;
    bool sphere_tangent_trivial = false;
    bool sphere_gen_trivial = false;
    std::uint64_t sphere_min_copies = 0;

    /// Trivial when parallelizable, non-trivial when the obstruction is
    /// nonzero, undecided otherwise.
    Tristate rp_gen_trivial() const noexcept {
        if (!obstruction_trivial) return Tristate::no;
        return parallelizable_known == Tristate::yes ? Tristate::yes : Tristate::undecided;
    }
};

inline SwClassification classify_dimension(std::size_t n) {
    SwClassification row;
    row.n = n;
    row.tangent_sw = sw_tangent_rpn(n);
    row.gen_sw = sw_gen_tangent_rpn(n);
    row.obstruction_trivial = row.gen_sw.is_one();
    if (n == 0 || parallelizable_dimension(n))
        row.parallelizable_known = Tristate::yes;
    else if (!row.tangent_sw.is_one())
        row.parallelizable_known = Tristate::no;
    else
        row.parallelizable_known = Tristate::undecided;
    row.sphere_tangent_trivial = n == 0 || parallelizable_dimension(n);
    if (n == 0) {
        row.sphere_min_copies = 1;
        row.sphere_gen_trivial = true;
    } else {
        // TS^n + R = R^(n+1): stably trivial with k = 1, m = n + 1, and TT S^n = TS^n + TS^n.
        row.sphere_min_copies = allard_min_copies(1, n + 1);
        row.sphere_gen_trivial = row.sphere_min_copies <= 2;
    }
    return row;
}

inline std::vector<SwClassification> classify_table(std::size_t n_max) {
    if (n_max < 1) throw std::domain_error("classify_table: n_max must be >= 1");
    detail::check_rp_dimension(n_max);
    std::vector<SwClassification> rows;
    rows.reserve(n_max);
    for (std::size_t n = 1; n <= n_max; ++n) rows.push_back(classify_dimension(n));
    return rows;
}

}  // namespace genbundle
