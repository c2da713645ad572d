#include "mvb/subset_lattice.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace mvb {

void check_dimension(int k, bool force_large) {
    const int cap = force_large ? kMaxDim : kDefaultDimCap;
    if (k < 1 || k > cap) {
        std::string msg = "dimension k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(cap) + "]";
        if (!force_large && k > kDefaultDimCap && k <= kMaxDim) {
            msg += " (use --force-large-k to allow up to " + std::to_string(kMaxDim) + ")";
        }
        throw std::invalid_argument(msg);
    }
}

namespace {

void require_dim(int k) {
    if (k < 1 || k > kMaxDim) {
        throw std::invalid_argument("dimension k=" + std::to_string(k) + " outside [1, " +
                                    std::to_string(kMaxDim) + "]");
    }
}

void require_same_dim(int a, int b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

}  // namespace

Subset::Subset(Mask mask, int k) : mask_(mask), k_(k) {
    require_dim(k);
    if (mask >= lattice_size(k)) {
        throw std::invalid_argument("subset mask out of range for k=" + std::to_string(k));
    }
}

Subset Subset::singleton(int node, int k) {
    if (node < 1 || node > k) {
        throw std::invalid_argument("node index " + std::to_string(node) + " outside 1.." +
                                    std::to_string(k));
    }
    return Subset(Mask{1} << (node - 1), k);
}

Subset Subset::of(const std::vector<int>& nodes, int k) {
    Mask m = 0;
    for (int node : nodes) {
        m |= singleton(node, k).mask();
    }
    return Subset(m, k);
}

std::vector<int> Subset::nodes() const {
    std::vector<int> out;
    out.reserve(size());
    for (int j = 1; j <= k_; ++j) {
        if (contains(j)) out.push_back(j);
    }
    return out;
}

Outcome::Outcome(Mask bits, int k) : bits_(bits), k_(k) {
    require_dim(k);
    if (bits >= lattice_size(k)) {
        throw std::invalid_argument("outcome bits out of range for k=" + std::to_string(k));
    }
}

Outcome Outcome::from_values(const std::vector<int>& values) {
    Mask bits = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (values[j] != 0 && values[j] != 1) {
            throw std::invalid_argument("outcome value at position " + std::to_string(j + 1) +
                                        " is not binary");
        }
        if (values[j]) bits |= Mask{1} << j;
    }
    return Outcome(bits, static_cast<int>(values.size()));
}

bool is_subset(const Subset& a, const Subset& b) {
    require_same_dim(a.dim(), b.dim());
    return (a.mask() & ~b.mask()) == 0;
}

Subset set_union(const Subset& a, const Subset& b) {
    require_same_dim(a.dim(), b.dim());
    return Subset(a.mask() | b.mask(), a.dim());
}

Subset set_intersection(const Subset& a, const Subset& b) {
    require_same_dim(a.dim(), b.dim());
    return Subset(a.mask() & b.mask(), a.dim());
}

std::vector<Subset> enumerate_supersets(const Subset& tau) {
    std::vector<Subset> out;
    out.reserve(lattice_size(tau.dim() - tau.size()));
    for_each_superset(tau.mask(), tau.dim(), [&](Mask m) { out.emplace_back(m, tau.dim()); });
    return out;
}

std::vector<Subset> enumerate_subsets(const Subset& tau) {
    std::vector<Subset> out;
    out.reserve(lattice_size(tau.size()));
    for_each_subset(tau.mask(), [&](Mask m) { out.emplace_back(m, tau.dim()); });
    return out;
}

int interaction_statistic(const Subset& tau, const Outcome& y) {
    require_same_dim(tau.dim(), y.dim());
    return (tau.mask() & ~y.bits()) == 0 ? 1 : 0;
}

Mask compress_bits(Mask value, Mask select) {
    Mask out = 0;
    int pos = 0;
    for (Mask s = select; s != 0; s &= s - 1) {
        const Mask low = s & (~s + 1);
        if (value & low) out |= Mask{1} << pos;
        ++pos;
    }
    return out;
}

Mask expand_bits(Mask packed, Mask select) {
    Mask out = 0;
    int pos = 0;
    for (Mask s = select; s != 0; s &= s - 1) {
        const Mask low = s & (~s + 1);
        if ((packed >> pos) & 1u) out |= low;
        ++pos;
    }
    return out;
}

namespace {

void require_lattice(std::span<double> a, int k) {
    require_dim(k);
    if (a.size() != lattice_size(k)) {
        throw std::invalid_argument("lattice array has length " + std::to_string(a.size()) +
                                    ", expected 2^" + std::to_string(k));
    }
}

}  // namespace

void subset_sum_transform(std::span<double> a, int k) {
    require_lattice(a, k);
    for (int b = 0; b < k; ++b) {
        const Mask bit = Mask{1} << b;
        for (Mask m = 0; m < a.size(); ++m) {
            if (m & bit) a[m] += a[m ^ bit];
        }
    }
}

void subset_mobius_transform(std::span<double> a, int k) {
    require_lattice(a, k);
    for (int b = 0; b < k; ++b) {
        const Mask bit = Mask{1} << b;
        for (Mask m = 0; m < a.size(); ++m) {
            if (m & bit) a[m] -= a[m ^ bit];
        }
    }
}

void superset_sum_transform(std::span<double> a, int k) {
    require_lattice(a, k);
    for (int b = 0; b < k; ++b) {
        const Mask bit = Mask{1} << b;
        for (Mask m = 0; m < a.size(); ++m) {
            if (!(m & bit)) a[m] += a[m | bit];
        }
    }
}

std::string to_string(const Subset& tau) {
    std::string out;
    for (int node : tau.nodes()) {
        if (!out.empty()) out += ',';
        out += std::to_string(node);
    }
    return out;
}

std::vector<int> parse_node_list(std::string_view text) {
    std::vector<int> nodes;
    if (text.empty()) throw std::invalid_argument("empty subset notation");
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view tok = text.substr(pos, comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        int node = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), node);
        if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() || node < 1) {
            throw std::invalid_argument("bad subset notation \"" + std::string(text) + "\"");
        }
        if (std::find(nodes.begin(), nodes.end(), node) != nodes.end()) {
            throw std::invalid_argument("duplicate node in \"" + std::string(text) + "\"");
        }
        nodes.push_back(node);
        pos = comma + 1;
    }
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

Subset parse_subset(std::string_view text, int k) {
    return Subset::of(parse_node_list(text), k);
}

}  // namespace mvb
