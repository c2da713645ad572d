#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvb {

// Hard ceiling on the graph dimension; the lattice has 2^k slots.
inline constexpr int kMaxDim = 20;
// Dimensions above this need an explicit opt-in (force_large).
inline constexpr int kDefaultDimCap = 15;

using Mask = std::uint32_t;

/// Throws std::invalid_argument unless 1 <= k <= cap, where cap is
/// kDefaultDimCap, or kMaxDim when force_large is set.
void check_dimension(int k, bool force_large = false);

inline constexpr std::size_t lattice_size(int k) { return std::size_t{1} << k; }

/// A subset tau of the node set {1..k}. Bit j-1 of the mask stands for
/// node j, and the mask doubles as the slot index in every dense
/// parameter array. mask == 0 is the empty set.
class Subset {
public:
    Subset() = default;
    Subset(Mask mask, int k);

    static Subset empty(int k) { return Subset(0, k); }
    static Subset full(int k) { return Subset(static_cast<Mask>(lattice_size(k) - 1), k); }
    static Subset singleton(int node, int k);
    /// Builds from 1-based node indices.
    static Subset of(const std::vector<int>& nodes, int k);

    Mask mask() const { return mask_; }
    int dim() const { return k_; }
    int size() const { return std::popcount(mask_); }
    bool is_empty() const { return mask_ == 0; }
    bool contains(int node) const { return (mask_ >> (node - 1)) & 1u; }
    /// Ascending 1-based node indices.
    std::vector<int> nodes() const;

    friend bool operator==(const Subset&, const Subset&) = default;

private:
    Mask mask_ = 0;
    int k_ = 1;
};

/// A realization y in {0,1}^k; bit j-1 holds y_j.
class Outcome {
public:
    Outcome() = default;
    Outcome(Mask bits, int k);
    static Outcome from_values(const std::vector<int>& values);

    Mask bits() const { return bits_; }
    int dim() const { return k_; }
    int value(int node) const { return static_cast<int>((bits_ >> (node - 1)) & 1u); }
    Subset support() const { return Subset(bits_, k_); }

    friend bool operator==(const Outcome&, const Outcome&) = default;

private:
    Mask bits_ = 0;
    int k_ = 1;
};

bool is_subset(const Subset& a, const Subset& b);

Subset set_union(const Subset& a, const Subset& b);
Subset set_intersection(const Subset& a, const Subset& b);

/// All tau0 with tau ⊆ tau0 ⊆ {1..k}, increasing mask order.
std::vector<Subset> enumerate_supersets(const Subset& tau);

/// All tau0 ⊆ tau, increasing mask order.
std::vector<Subset> enumerate_subsets(const Subset& tau);

/// B^tau(y): 1 iff every node in tau is 1 in y. B^∅ = 1.
int interaction_statistic(const Subset& tau, const Outcome& y);

/// Iterates the supersets of `mask` inside a k-bit universe, ascending.
template <class Fn>
void for_each_superset(Mask mask, int k, Fn&& fn) {
    const Mask full = static_cast<Mask>(lattice_size(k) - 1);
    const Mask free = full & ~mask;
    Mask sub = 0;
    do {
        fn(static_cast<Mask>(mask | sub));
        sub = (sub - free) & free;
    } while (sub != 0);
}

/// Iterates the subsets of `mask`, ascending.
template <class Fn>
void for_each_subset(Mask mask, Fn&& fn) {
    Mask sub = 0;
    do {
        fn(sub);
        sub = (sub - mask) & mask;
    } while (sub != 0);
}

/// Packs the bits of `value` selected by `select` into the low bits,
/// preserving order (a software PEXT).
Mask compress_bits(Mask value, Mask select);
/// Inverse of compress_bits: scatters low bits of `packed` into the
/// positions set in `select`.
Mask expand_bits(Mask packed, Mask select);

// In-place lattice transforms over a dense array of length 2^k, O(k 2^k).
// subset_sum:    a[m] <- sum_{s ⊆ m} a[s]
// subset_mobius: inverse of subset_sum, a[m] <- sum_{s ⊆ m} (-1)^{|m|-|s|} a[s]
// superset_sum:  a[m] <- sum_{s ⊇ m} a[s]
void subset_sum_transform(std::span<double> a, int k);
void subset_mobius_transform(std::span<double> a, int k);
void superset_sum_transform(std::span<double> a, int k);

// Textual notation: ascending 1-based indices joined by commas, "1,3".
std::string to_string(const Subset& tau);
/// Parses "1,3" into a subset of {1..k}. Rejects empty text, duplicates,
/// and indices outside 1..k.
Subset parse_subset(std::string_view text, int k);
/// Parses "1,3" without a known dimension; returns the 1-based indices.
std::vector<int> parse_node_list(std::string_view text);

}  // namespace mvb
