#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ccnet/lattice.hpp"
#include "ccnet/random.hpp"

namespace ccnet {

using cplx = std::complex<double>;

/// The i.i.d. uniform phase configuration ω over a geometry.
///
/// Phases are hashed from (seed, site), so two geometries sampled with the same
/// seed agree on every site they share. This is what lets an inner box, its
/// complement and the ambient torus see one and the same ω.
class DisorderField {
public:
    static DisorderField sample(std::uint64_t seed, const BoxSpec& box) {
        DisorderField field(seed, box);
        field.phases_.reserve(field.map_.size());
        for (const auto& s : field.map_.sites()) field.phases_.push_back(std::polar(1.0, site_angle(seed, s)));
        return field;
    }

    /// Explicit phases in the geometry's dense order.
    static DisorderField from_phases(const BoxSpec& box, std::vector<cplx> phases, std::uint64_t seed = 0) {
        DisorderField field(seed, box);
        if (phases.size() != field.map_.size()) throw GeometryError("phase count does not match the geometry");
        field.phases_ = std::move(phases);
        return field;
    }

    std::uint64_t seed() const { return seed_; }
    const BoxSpec& box() const { return map_.box(); }
    const IndexMap& map() const { return map_; }
    const std::vector<cplx>& phases() const { return phases_; }

    bool covers(Site s) const { return map_.contains(s); }

    cplx phase(Site s) const {
        const auto i = map_.index(s);
        if (!i) throw GeometryError("disorder field has no phase at site " + to_string(s));
        return phases_[*i];
    }

    /// Θ_ν ω: the field whose phase at μ is ω(μ + 2ν). Periodic geometries only
    /// in the shifted directions.
    DisorderField shifted(Site nu) const {
        const Site step{2 * nu.m, 2 * nu.n};
        if ((step.m != 0 && !box().periodic_x()) || (step.n != 0 && !box().periodic_y())) {
            throw GeometryError("shift requires periodicity in the shifted direction");
        }
        std::vector<cplx> out;
        out.reserve(phases_.size());
        for (const auto& s : map_.sites()) out.push_back(phase(s + step));
        return from_phases(box(), std::move(out), seed_);
    }

private:
    DisorderField(std::uint64_t seed, const BoxSpec& box) : seed_(seed), map_(box) {}

    std::uint64_t seed_;
    IndexMap map_;
    std::vector<cplx> phases_;
};

inline DisorderField sample_disorder(std::uint64_t seed, const BoxSpec& box) {
    return DisorderField::sample(seed, box);
}

}  // namespace ccnet
