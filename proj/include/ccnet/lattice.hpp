#pragma once

// Z^2 geometry of the network model: sites, the two plaquette decompositions,
// finite boxes, periodic strips and tori, and the dense index map shared by
// every operator built over a geometry.

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ccnet/errors.hpp"

namespace ccnet {

struct Site {
    int m = 0;  // x
    int n = 0;  // y

    auto operator<=>(const Site&) const = default;

    Site operator+(const Site& o) const { return {m + o.m, n + o.n}; }
    Site operator-(const Site& o) const { return {m - o.m, n - o.n}; }
};

using SiteSet = std::set<Site>;

inline std::string to_string(const Site& s) {
    return std::to_string(s.m) + ":" + std::to_string(s.n);
}

constexpr int floor_div2(int a) { return a >= 0 ? a / 2 : -((-a + 1) / 2); }

enum class Chirality { counterclockwise, clockwise };

struct BlockCoord {
    int j = 0;
    int k = 0;
    Chirality chirality = Chirality::counterclockwise;

    auto operator<=>(const BlockCoord&) const = default;
};

/// The unique block of the given chirality containing `site`.
constexpr BlockCoord block_of(Site site, Chirality chirality) {
    if (chirality == Chirality::counterclockwise) {
        return {floor_div2(site.m), floor_div2(site.n), chirality};
    }
    return {floor_div2(site.m + 1), floor_div2(site.n + 1), chirality};
}

/// Sites of a block in cyclic order; the block's rotation maps entry i to entry i+1.
constexpr std::array<Site, 4> block_sites(BlockCoord b) {
    const int x = 2 * b.j;
    const int y = 2 * b.k;
    if (b.chirality == Chirality::counterclockwise) {
        return {Site{x, y}, Site{x + 1, y}, Site{x + 1, y + 1}, Site{x, y + 1}};
    }
    return {Site{x, y}, Site{x, y - 1}, Site{x - 1, y - 1}, Site{x - 1, y}};
}

constexpr bool is_even(int a) { return (a & 1) == 0; }

/// Image of `s` under the counterclockwise block rotation.
constexpr Site ccw_successor(Site s) {
    const bool em = is_even(s.m);
    const bool en = is_even(s.n);
    if (em && en) return {s.m + 1, s.n};
    if (!em && en) return {s.m, s.n + 1};
    if (!em && !en) return {s.m - 1, s.n};
    return {s.m, s.n - 1};
}

/// Image of `s` under the clockwise block rotation.
constexpr Site cw_successor(Site s) {
    const bool em = is_even(s.m);
    const bool en = is_even(s.n);
    if (em && en) return {s.m, s.n - 1};
    if (em && !en) return {s.m - 1, s.n};
    if (!em && !en) return {s.m, s.n + 1};
    return {s.m + 1, s.n};
}

/// The even-even representative of the counterclockwise block containing `s`.
constexpr Site block_anchor(Site s) { return {2 * floor_div2(s.m), 2 * floor_div2(s.n)}; }

/// True iff both sites lie in the same counterclockwise block.
constexpr bool relation_sim(Site a, Site b) {
    return block_of(a, Chirality::counterclockwise) == block_of(b, Chirality::counterclockwise);
}

inline int linf_distance(Site a, Site b) { return std::max(std::abs(a.m - b.m), std::abs(a.n - b.n)); }

inline double euclidean_norm(Site a) { return std::hypot(double(a.m), double(a.n)); }

enum class Mode { box, strip_x, torus };

inline std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::box: return "box";
    case Mode::strip_x: return "strip";
    case Mode::torus: return "torus";
    }
    return "?";
}

inline Mode parse_mode(const std::string& text) {
    if (text == "box") return Mode::box;
    if (text == "strip" || text == "strip_x") return Mode::strip_x;
    if (text == "torus") return Mode::torus;
    throw GeometryError("unknown geometry mode '" + text + "'");
}

/// Finite geometry.
///
/// - box:   Z^2 ∩ ([-2L1, 2L1-1] x [-2L2+2, 2L2+1]) + offset, closed by elastic walls.
/// - torus: the same rectangle with periodic identification in both directions.
/// - strip: y-range [-2M+2, 2M+1] with M = L2, x-range of even `length`
///          starting at an even coordinate, periodic in x.
///
/// Offsets are restricted to (2Z)^2 so every geometry is an exact union of
/// counterclockwise blocks.
struct BoxSpec {
    int L1 = 1;
    int L2 = 1;
    Site offset{0, 0};
    Mode mode = Mode::box;
    int length = 0;  // strip only

    static BoxSpec box(int L1, int L2, Site offset = {}) { return checked({L1, L2, offset, Mode::box, 0}); }
    static BoxSpec torus(int L1, int L2, Site offset = {}) { return checked({L1, L2, offset, Mode::torus, 0}); }
    static BoxSpec strip(int M, int length) { return checked({0, M, {}, Mode::strip_x, length}); }

    void validate() const {
        if (L2 < 1) throw GeometryError("L2 must be a positive integer");
        if (mode == Mode::strip_x) {
            if (length < 4 || length % 2 != 0) throw GeometryError("strip length must be even and >= 4");
        } else if (L1 < 1) {
            throw GeometryError("L1 must be a positive integer");
        }
        if (!is_even(offset.m) || !is_even(offset.n)) throw GeometryError("offset must lie in (2Z)^2");
    }

    int x_min() const { return mode == Mode::strip_x ? -2 * (length / 4) : -2 * L1 + offset.m; }
    int x_max() const { return x_min() + width() - 1; }
    int y_min() const { return -2 * L2 + 2 + offset.n; }
    int y_max() const { return 2 * L2 + 1 + offset.n; }
    int width() const { return mode == Mode::strip_x ? length : 4 * L1; }
    int height() const { return 4 * L2; }

    bool periodic_x() const { return mode != Mode::box; }
    bool periodic_y() const { return mode == Mode::torus; }

    std::size_t site_count() const { return std::size_t(width()) * std::size_t(height()); }
    /// Number of counterclockwise blocks; equals vol Λ_L = 4 L1 L2 for a box.
    std::size_t block_count() const { return site_count() / 4; }

    /// Membership in the coordinate rectangle (no periodic identification).
    bool contains(Site s) const {
        return s.m >= x_min() && s.m <= x_max() && s.n >= y_min() && s.n <= y_max();
    }

    /// Canonical representative of `s` inside the rectangle, wrapping periodic
    /// directions; nullopt if `s` falls outside a closed direction.
    std::optional<Site> canonical(Site s) const {
        auto wrap = [](int v, int lo, int span) { return lo + (((v - lo) % span) + span) % span; };
        if (periodic_x()) s.m = wrap(s.m, x_min(), width());
        if (periodic_y()) s.n = wrap(s.n, y_min(), height());
        if (!contains(s)) return std::nullopt;
        return s;
    }

    /// Minimal-image displacement b - a.
    Site displacement(Site a, Site b) const {
        auto fold = [](int d, int span) {
            d %= span;
            if (d > span / 2) d -= span;
            if (d < -span / 2) d += span;
            return d;
        };
        Site d = b - a;
        if (periodic_x()) d.m = fold(d.m, width());
        if (periodic_y()) d.n = fold(d.n, height());
        return d;
    }

    double distance(Site a, Site b) const { return euclidean_norm(displacement(a, b)); }

    bool operator==(const BoxSpec&) const = default;

private:
    static BoxSpec checked(BoxSpec b) {
        b.validate();
        return b;
    }
};

/// Dense index map over a geometry, row-major by (n, m). An optional excluded
/// box removes its sites, which realizes the complement of an inner box.
class IndexMap {
public:
    explicit IndexMap(BoxSpec box, std::optional<BoxSpec> excluded = std::nullopt)
        : box_(box), excluded_(excluded) {
        box_.validate();
        lookup_.assign(box_.site_count(), -1);
        for (int n = box_.y_min(); n <= box_.y_max(); ++n) {
            for (int m = box_.x_min(); m <= box_.x_max(); ++m) {
                const Site s{m, n};
                if (excluded_ && excluded_->contains(s)) continue;
                lookup_[raw(s)] = static_cast<long>(sites_.size());
                sites_.push_back(s);
            }
        }
    }

    const BoxSpec& box() const { return box_; }
    const std::optional<BoxSpec>& excluded() const { return excluded_; }
    std::size_t size() const { return sites_.size(); }
    const std::vector<Site>& sites() const { return sites_; }
    Site site(std::size_t index) const { return sites_.at(index); }

    std::optional<std::size_t> index(Site s) const {
        const auto c = box_.canonical(s);
        if (!c) return std::nullopt;
        const long i = lookup_[raw(*c)];
        if (i < 0) return std::nullopt;
        return static_cast<std::size_t>(i);
    }

    std::size_t at(Site s) const {
        if (auto i = index(s)) return *i;
        throw GeometryError("site " + to_string(s) + " is not in the domain");
    }

    bool contains(Site s) const { return index(s).has_value(); }

private:
    std::size_t raw(Site s) const {
        return std::size_t(s.n - box_.y_min()) * std::size_t(box_.width()) + std::size_t(s.m - box_.x_min());
    }

    BoxSpec box_;
    std::optional<BoxSpec> excluded_;
    std::vector<Site> sites_;
    std::vector<long> lookup_;
};

inline constexpr std::array<Site, 8> kUnitNeighbors{
    Site{-1, -1}, Site{0, -1}, Site{1, -1}, Site{-1, 0}, Site{1, 0}, Site{-1, 1}, Site{0, 1}, Site{1, 1}};

/// N(S): all α+v with α in S and |v|_∞ = 1.
inline SiteSet neighborhood(const SiteSet& set) {
    SiteSet out;
    for (const auto& a : set) {
        for (const auto& v : kUnitNeighbors) out.insert(a + v);
    }
    return out;
}

template <class Member>
SiteSet boundary_where(const SiteSet& set, Member&& member) {
    SiteSet out;
    for (const auto& a : set) {
        for (const auto& v : kUnitNeighbors) {
            if (!member(a + v)) {
                out.insert(a);
                break;
            }
        }
    }
    return out;
}

inline SiteSet site_set(const BoxSpec& box) {
    IndexMap map(box);
    return {map.sites().begin(), map.sites().end()};
}

/// ∂Λ: sites of the box with a |·|_∞-neighbor outside it (Z^2 semantics).
inline SiteSet boundary(const BoxSpec& box) {
    if (box.mode != Mode::box) throw GeometryError("boundary() requires a finite box");
    return boundary_where(site_set(box), [&](Site s) { return box.contains(s); });
}

inline SiteSet interior(const BoxSpec& box) {
    if (box.mode != Mode::box) throw GeometryError("interior() requires a finite box");
    SiteSet all = site_set(box);
    for (const auto& s : boundary(box)) all.erase(s);
    return all;
}

/// ∂(Λ^c): sites outside the box with a |·|_∞-neighbor inside it.
inline SiteSet complement_boundary(const BoxSpec& box) {
    SiteSet out;
    for (const auto& s : neighborhood(site_set(box))) {
        if (!box.contains(s)) out.insert(s);
    }
    return out;
}

/// True if `s` and all of its |·|_∞-neighbors lie outside the box.
inline bool in_complement_interior(const BoxSpec& box, Site s) {
    if (box.contains(s)) return false;
    for (const auto& v : kUnitNeighbors) {
        if (box.contains(s + v)) return false;
    }
    return true;
}

}  // namespace ccnet
