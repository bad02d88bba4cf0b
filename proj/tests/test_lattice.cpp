#include <gtest/gtest.h>

#include <map>

#include "ccnet/lattice.hpp"

using namespace ccnet;

namespace {

// Membership oracle straight from the block span definitions.
bool in_block(Site s, BlockCoord b) {
    for (const auto& x : block_sites(b)) {
        if (x == s) return true;
    }
    return false;
}

SiteSet brute_interior(const BoxSpec& box) {
    SiteSet out;
    for (int m = box.x_min(); m <= box.x_max(); ++m) {
        for (int n = box.y_min(); n <= box.y_max(); ++n) {
            bool inside = true;
            for (int dm = -1; dm <= 1; ++dm) {
                for (int dn = -1; dn <= 1; ++dn) {
                    if (std::max(std::abs(dm), std::abs(dn)) == 1 && !box.contains({m + dm, n + dn})) inside = false;
                }
            }
            if (inside) out.insert({m, n});
        }
    }
    return out;
}

}  // namespace

TEST(BlockOf, Examples) {
    EXPECT_EQ(block_of({0, 0}, Chirality::counterclockwise), (BlockCoord{0, 0, Chirality::counterclockwise}));
    EXPECT_EQ(block_of({3, 2}, Chirality::counterclockwise), (BlockCoord{1, 1, Chirality::counterclockwise}));
    EXPECT_EQ(block_of({0, 0}, Chirality::clockwise), (BlockCoord{0, 0, Chirality::clockwise}));
}

TEST(BlockOf, AgreesWithSpanDefinitionOnWindow) {
    for (int m = -9; m <= 9; ++m) {
        for (int n = -9; n <= 9; ++n) {
            for (auto ch : {Chirality::counterclockwise, Chirality::clockwise}) {
                const auto b = block_of({m, n}, ch);
                EXPECT_TRUE(in_block({m, n}, b)) << m << "," << n;
            }
        }
    }
}

TEST(BlockAnchor, Examples) {
    EXPECT_EQ(block_anchor({0, 0}), (Site{0, 0}));
    EXPECT_EQ(block_anchor({3, 2}), (Site{2, 2}));
    EXPECT_EQ(block_anchor({-1, -1}), (Site{-2, -2}));
}

TEST(BlockAnchor, IdempotentOnWindow) {
    for (int m = -50; m < 50; ++m) {
        for (int n = -50; n < 50; ++n) {
            const Site a = block_anchor({m, n});
            EXPECT_EQ(block_anchor(a), a);
            EXPECT_TRUE(relation_sim(a, {m, n}));
            EXPECT_TRUE(is_even(a.m) && is_even(a.n));
        }
    }
}

TEST(Successors, FollowPermutationOrder) {
    for (int j = -3; j <= 3; ++j) {
        for (int k = -3; k <= 3; ++k) {
            for (auto ch : {Chirality::counterclockwise, Chirality::clockwise}) {
                const auto sites = block_sites({j, k, ch});
                for (std::size_t i = 0; i < 4; ++i) {
                    const Site next = ch == Chirality::counterclockwise ? ccw_successor(sites[i]) : cw_successor(sites[i]);
                    EXPECT_EQ(next, sites[(i + 1) % 4]);
                }
            }
        }
    }
}

TEST(RelationSim, Examples) {
    EXPECT_TRUE(relation_sim({0, 0}, {1, 1}));
    EXPECT_FALSE(relation_sim({0, 0}, {2, 0}));
    EXPECT_TRUE(relation_sim({-1, -1}, {-2, -2}));
}

TEST(RelationSim, EquivalenceClassesOfSizeFour) {
    std::map<BlockCoord, int> sizes;
    for (int m = -8; m < 8; ++m) {
        for (int n = -8; n < 8; ++n) ++sizes[block_of({m, n}, Chirality::counterclockwise)];
    }
    for (const auto& [b, count] : sizes) EXPECT_EQ(count, 4);
    // symmetry and transitivity on a small window
    for (int a = 0; a < 36; ++a) {
        const Site x{a % 6 - 3, a / 6 - 3};
        EXPECT_TRUE(relation_sim(x, x));
        for (int b = 0; b < 36; ++b) {
            const Site y{b % 6 - 3, b / 6 - 3};
            EXPECT_EQ(relation_sim(x, y), relation_sim(y, x));
            for (int c = 0; c < 36; c += 5) {
                const Site w{c % 6 - 3, c / 6 - 3};
                if (relation_sim(x, y) && relation_sim(y, w)) EXPECT_TRUE(relation_sim(x, w));
            }
        }
    }
}

TEST(BoxSpec, IndexRanges) {
    const auto box = BoxSpec::box(2, 1);
    EXPECT_EQ(box.x_min(), -4);
    EXPECT_EQ(box.x_max(), 3);
    EXPECT_EQ(box.y_min(), 0);
    EXPECT_EQ(box.y_max(), 3);
    EXPECT_EQ(box.site_count(), 16u * 2 * 1);
    EXPECT_EQ(box.block_count(), 4u * 2 * 1);

    const auto shifted = BoxSpec::box(1, 1, {4, -2});
    EXPECT_EQ(shifted.x_min(), 2);
    EXPECT_EQ(shifted.y_max(), 1);
}

TEST(BoxSpec, RejectsOddOffsetsAndBadSizes) {
    EXPECT_THROW(BoxSpec::box(1, 1, {1, 0}), GeometryError);
    EXPECT_THROW(BoxSpec::box(0, 1), GeometryError);
    EXPECT_THROW(BoxSpec::strip(1, 7), GeometryError);
}

TEST(BoxSpec, StripGeometry) {
    const auto strip = BoxSpec::strip(2, 16);
    EXPECT_EQ(strip.y_min(), -2);
    EXPECT_EQ(strip.y_max(), 5);
    EXPECT_EQ(strip.width(), 16);
    EXPECT_TRUE(is_even(strip.x_min()));
    EXPECT_TRUE(strip.periodic_x());
    EXPECT_FALSE(strip.periodic_y());
    EXPECT_EQ(strip.canonical({strip.x_max() + 1, 0}), (Site{strip.x_min(), 0}));
    EXPECT_FALSE(strip.canonical({0, strip.y_max() + 1}).has_value());
}

TEST(BoxSpec, BlocksPartitionEveryGeometry) {
    for (const auto& box : {BoxSpec::box(1, 1), BoxSpec::box(3, 2, {2, -4}), BoxSpec::torus(2, 3), BoxSpec::strip(1, 12)}) {
        IndexMap map(box);
        std::map<BlockCoord, int> count;
        for (const auto& s : map.sites()) ++count[block_of(s, Chirality::counterclockwise)];
        EXPECT_EQ(count.size(), box.block_count());
        std::size_t total = 0;
        for (const auto& [b, c] : count) {
            EXPECT_EQ(c, 4);
            total += std::size_t(c);
        }
        EXPECT_EQ(total, box.site_count());
    }
}

TEST(IndexMap, RowMajorRoundTrip) {
    const auto box = BoxSpec::box(2, 3, {2, 2});
    IndexMap map(box);
    ASSERT_EQ(map.size(), box.site_count());
    EXPECT_EQ(map.site(0), (Site{box.x_min(), box.y_min()}));
    EXPECT_EQ(map.site(1), (Site{box.x_min() + 1, box.y_min()}));
    for (std::size_t i = 0; i < map.size(); ++i) EXPECT_EQ(map.at(map.site(i)), i);
}

TEST(IndexMap, ExcludedInnerBox) {
    const auto ambient = BoxSpec::torus(3, 3);
    const auto inner = BoxSpec::box(1, 1);
    IndexMap map(ambient, inner);
    EXPECT_EQ(map.size(), ambient.site_count() - inner.site_count());
    EXPECT_FALSE(map.contains({0, 0}));
    EXPECT_TRUE(map.contains({-3, 0}));
}

TEST(IndexMap, TorusWraps) {
    const auto torus = BoxSpec::torus(1, 1);
    IndexMap map(torus);
    EXPECT_EQ(map.at({torus.x_max() + 1, torus.y_min()}), map.at({torus.x_min(), torus.y_min()}));
    EXPECT_EQ(map.at({0, torus.y_min() - 1}), map.at({0, torus.y_max()}));
}

TEST(Boundary, Counts) {
    EXPECT_EQ(boundary(BoxSpec::box(1, 1)).size(), 12u);
    EXPECT_EQ(boundary(BoxSpec::box(2, 1)).size(), 20u);
    for (int L1 = 1; L1 <= 4; ++L1) {
        for (int L2 = 1; L2 <= 4; ++L2) {
            EXPECT_EQ(boundary(BoxSpec::box(L1, L2)).size(), std::size_t(2 * 4 * L1 + 2 * 4 * L2 - 4));
        }
    }
}

TEST(Boundary, InteriorOfSmallestBox) {
    const auto box = BoxSpec::box(1, 1);  // [-2,1] x [0,3]
    const SiteSet expected = brute_interior(box);
    EXPECT_EQ(interior(box), expected);
    EXPECT_EQ(expected, (SiteSet{{-1, 1}, {0, 1}, {-1, 2}, {0, 2}}));
}

TEST(Boundary, DisjointUnionWithInterior) {
    for (const auto& box : {BoxSpec::box(1, 1), BoxSpec::box(2, 3), BoxSpec::box(3, 1, {-2, 4})}) {
        const auto b = boundary(box);
        const auto in = interior(box);
        EXPECT_EQ(in, brute_interior(box));
        for (const auto& s : b) EXPECT_FALSE(in.count(s));
        EXPECT_EQ(b.size() + in.size(), box.site_count());
    }
}

TEST(Neighborhood, Basics) {
    EXPECT_TRUE(neighborhood({}).empty());
    const auto n = neighborhood({{0, 0}});
    EXPECT_EQ(n.size(), 8u);
    EXPECT_FALSE(n.count({0, 0}));
}

TEST(Neighborhood, OfComplementBoundaryMatchesBruteForce) {
    const auto box = BoxSpec::box(1, 1);
    // ∂(Λ^c): outside sites with a neighbor in Λ, i.e. the ring [-3,2] x [-1,4] minus the box.
    SiteSet ring;
    for (int m = -3; m <= 2; ++m) {
        for (int n = -1; n <= 4; ++n) {
            if (!box.contains({m, n})) ring.insert({m, n});
        }
    }
    EXPECT_EQ(complement_boundary(box), ring);
    // N of that ring: every site within |.|_∞ distance 1 of some ring site.
    SiteSet expected;
    for (int m = -6; m <= 6; ++m) {
        for (int n = -6; n <= 8; ++n) {
            for (const auto& r : ring) {
                const int d = linf_distance({m, n}, r);
                if (d == 1) {
                    expected.insert({m, n});
                    break;
                }
            }
        }
    }
    EXPECT_EQ(neighborhood(ring), expected);
    // [-4,3] x [-2,5] minus the four interior sites of the box
    EXPECT_EQ(expected.size(), 60u);
}

TEST(Distance, MinimalImageOnTorus) {
    const auto torus = BoxSpec::torus(2, 2);  // 8 x 8
    EXPECT_EQ(torus.displacement({-4, 0}, {3, 0}), (Site{-1, 0}));
    EXPECT_DOUBLE_EQ(torus.distance({0, 0}, {4, 0}), 4.0);
    EXPECT_DOUBLE_EQ(BoxSpec::box(2, 2).distance({-4, 0}, {3, 0}), 7.0);
}
