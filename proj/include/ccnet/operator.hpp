#pragma once

// Network operators U = D S(φ) as sparse complex matrices.
//
// S(φ) e_μ = cos φ e_{ccw(μ)} + i sin φ e_{cw(μ)}. Restricting to a region that
// is a union of counterclockwise blocks can only cut clockwise links; a cut link
// is replaced by full transmission along the counterclockwise rotation, so the
// column becomes e_{ccw(μ)}. Boxes, strips, complements and the decoupled
// operator are all instances of that rule with a different region labelling.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ccnet/disorder.hpp"
#include "ccnet/errors.hpp"
#include "ccnet/lattice.hpp"

namespace ccnet {

using SparseMatrix = Eigen::SparseMatrix<cplx>;  // column-compressed
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Scattering angle: (t, r) = (cos φ, sin φ).
struct PhaseAngle {
    double phi = 0.0;

    double t() const { return std::cos(phi); }
    double r() const { return std::sin(phi); }
};

/// φ = arccos(1/sqrt(1+e^ε)), ε being the distance of the energy to the nearest Landau level.
inline PhaseAngle phi_from_energy(double epsilon) {
    const double t = 1.0 / std::sqrt(1.0 + std::exp(epsilon));
    return {std::acos(t)};
}

enum class Boundary { full_torus, walls, complement_walls, decoupled };

inline std::string to_string(Boundary b) {
    switch (b) {
    case Boundary::full_torus: return "full_torus";
    case Boundary::walls: return "walls";
    case Boundary::complement_walls: return "complement_walls";
    case Boundary::decoupled: return "decoupled";
    }
    return "?";
}

inline Boundary parse_boundary(const std::string& text) {
    for (auto b : {Boundary::full_torus, Boundary::walls, Boundary::complement_walls, Boundary::decoupled}) {
        if (to_string(b) == text) return b;
    }
    throw GeometryError("unknown boundary '" + text + "'");
}

struct NetworkOperator {
    IndexMap domain;
    PhaseAngle phi;
    Boundary boundary = Boundary::walls;
    std::optional<BoxSpec> inner;  // complement_walls / decoupled only
    SparseMatrix matrix;
    std::optional<DisorderField> disorder;

    std::size_t dimension() const { return domain.size(); }
    const BoxSpec& geometry() const { return domain.box(); }
    std::optional<std::uint64_t> seed() const {
        if (disorder) return disorder->seed();
        return std::nullopt;
    }
};

/// The coupling V^(L) = U - U^(L) across the walls of an inner box.
struct CouplingOperator {
    SparseMatrix matrix;
    BoxSpec inner;
    BoxSpec ambient;

    std::size_t nonzeros() const {
        std::size_t count = 0;
        for (int c = 0; c < matrix.outerSize(); ++c) {
            for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) {
                if (it.value() != cplx(0.0)) ++count;
            }
        }
        return count;
    }

    double max_abs() const {
        double out = 0.0;
        for (int c = 0; c < matrix.outerSize(); ++c) {
            for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) out = std::max(out, std::abs(it.value()));
        }
        return out;
    }
};

namespace detail {

using Triplets = std::vector<Eigen::Triplet<cplx>>;

inline SparseMatrix from_triplets(std::size_t dim, const Triplets& t) {
    SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

inline void push(Triplets& t, std::size_t row, std::size_t col, cplx v) {
    if (v != cplx(0.0)) t.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
}

enum class CutLink { transmit, drop };

/// S over `domain`; a clockwise link is kept iff its target is in the domain and
/// `same_region(source, target)`. Cut links are either transmitted along the
/// counterclockwise rotation (the unitary restriction) or dropped (χ S χ).
template <class SameRegion>
SparseMatrix assemble_s(PhaseAngle phi, const IndexMap& domain, SameRegion&& same_region, CutLink cut) {
    const double c = phi.t();
    const cplx is = cplx(0.0, phi.r());
    Triplets t;
    t.reserve(2 * domain.size());
    for (std::size_t col = 0; col < domain.size(); ++col) {
        const Site s = domain.site(col);
        const auto ccw = domain.index(ccw_successor(s));
        if (!ccw) throw GeometryError("geometry is not a union of counterclockwise blocks at " + to_string(s));
        const auto cw = domain.index(cw_successor(s));
        if (cw && same_region(s, domain.site(*cw))) {
            push(t, *ccw, col, c);
            push(t, *cw, col, is);
        } else if (cut == CutLink::transmit) {
            push(t, *ccw, col, 1.0);
        } else {
            push(t, *ccw, col, c);
        }
    }
    return from_triplets(domain.size(), t);
}

inline void check_margin(const BoxSpec& inner, const BoxSpec& ambient) {
    if (inner.mode != Mode::box) throw GeometryError("inner region must be a finite box");
    if (inner.x_min() < ambient.x_min() + 2 || inner.x_max() > ambient.x_max() - 2 ||
        inner.y_min() < ambient.y_min() + 2 || inner.y_max() > ambient.y_max() - 2) {
        throw GeometryError("inner box must sit inside the ambient geometry with at least one block of margin");
    }
}

}  // namespace detail

/// Deterministic part S(φ) (D = I) over a box, strip or torus.
inline NetworkOperator build_s(PhaseAngle phi, const BoxSpec& box, Boundary boundary) {
    if (boundary == Boundary::full_torus && box.mode != Mode::torus) {
        throw GeometryError("full_torus boundary requires torus geometry");
    }
    if (boundary == Boundary::walls && box.mode == Mode::torus) {
        throw GeometryError("walls boundary requires a box or strip geometry");
    }
    if (boundary == Boundary::complement_walls || boundary == Boundary::decoupled) {
        throw GeometryError("complement and decoupled operators need an inner box; use build_s_complement / build_s_decoupled");
    }
    IndexMap domain(box);
    auto m = detail::assemble_s(phi, domain, [](Site, Site) { return true; }, detail::CutLink::transmit);
    return {std::move(domain), phi, boundary, std::nullopt, std::move(m), std::nullopt};
}

inline NetworkOperator build_s(PhaseAngle phi, const BoxSpec& box) {
    return build_s(phi, box, box.mode == Mode::torus ? Boundary::full_torus : Boundary::walls);
}

/// S^{Λ^c}: the unitary restriction to the ambient geometry minus `inner`, with
/// clockwise components transmitted along the inside faces of the complement.
inline NetworkOperator build_s_complement(PhaseAngle phi, const BoxSpec& inner, const BoxSpec& ambient) {
    detail::check_margin(inner, ambient);
    IndexMap domain(ambient, inner);
    auto m = detail::assemble_s(phi, domain, [](Site, Site) { return true; }, detail::CutLink::transmit);
    return {std::move(domain), phi, Boundary::complement_walls, inner, std::move(m), std::nullopt};
}

/// S^{Λ} ⊕ S^{Λ^c} in the ambient index order.
inline NetworkOperator build_s_decoupled(PhaseAngle phi, const BoxSpec& inner, const BoxSpec& ambient) {
    detail::check_margin(inner, ambient);
    IndexMap domain(ambient);
    auto same = [&](Site a, Site b) { return inner.contains(a) == inner.contains(b); };
    auto m = detail::assemble_s(phi, domain, same, detail::CutLink::transmit);
    return {std::move(domain), phi, Boundary::decoupled, inner, std::move(m), std::nullopt};
}

/// χ_Λ S(φ) χ_Λ on a finite box (not unitary).
inline SparseMatrix bulk_restriction(PhaseAngle phi, const BoxSpec& box) {
    if (box.mode != Mode::box) throw GeometryError("bulk_restriction requires a finite box");
    IndexMap domain(box);
    return detail::assemble_s(phi, domain, [](Site, Site) { return true; }, detail::CutLink::drop);
}

/// The wall term T^{Λ_L}(φ), written out term by term: (1 - cos φ) times the
/// top/bottom row sums over j and the right/left column sums over k.
inline SparseMatrix wall_term(PhaseAngle phi, const BoxSpec& box) {
    if (box.mode != Mode::box) throw GeometryError("wall_term requires a finite box");
    IndexMap domain(box);
    const double coeff = 1.0 - phi.t();
    const int L1 = box.L1;
    const int L2 = box.L2;
    const Site v = box.offset;
    detail::Triplets t;
    auto ket_bra = [&](Site ket, Site bra) { detail::push(t, domain.at(ket + v), domain.at(bra + v), coeff); };
    for (int j = -L1; j <= L1 - 1; ++j) {
        ket_bra({2 * j, 2 * L2 + 1}, {2 * j + 1, 2 * L2 + 1});
        ket_bra({2 * j + 1, -2 * L2 + 2}, {2 * j, -2 * L2 + 2});
    }
    for (int k = -L2 + 1; k <= L2; ++k) {
        ket_bra({2 * L1 - 1, 2 * k + 1}, {2 * L1 - 1, 2 * k});
        ket_bra({-2 * L1, 2 * k}, {-2 * L1, 2 * k + 1});
    }
    return detail::from_triplets(domain.size(), t);
}

/// U = D S: row μ of S scaled by ω_μ.
inline NetworkOperator build_u(const DisorderField& disorder, const NetworkOperator& s_op) {
    NetworkOperator u = s_op;
    std::vector<cplx> row_phase(s_op.domain.size());
    for (std::size_t i = 0; i < row_phase.size(); ++i) row_phase[i] = disorder.phase(s_op.domain.site(i));
    for (int c = 0; c < u.matrix.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(u.matrix, c); it; ++it) it.valueRef() *= row_phase[std::size_t(it.row())];
    }
    u.disorder = disorder;
    return u;
}

/// V^(L) assembled directly from the links that cross the inner wall: for a
/// site μ whose clockwise link is cut, column μ is
/// ω_{ccw(μ)} (cos φ - 1) e_{ccw(μ)} + ω_{cw(μ)} i sin φ e_{cw(μ)}.
inline CouplingOperator coupling_operator(const DisorderField& disorder, PhaseAngle phi, const BoxSpec& inner,
                                          const BoxSpec& ambient) {
    detail::check_margin(inner, ambient);
    IndexMap domain(ambient);
    detail::Triplets t;
    for (std::size_t col = 0; col < domain.size(); ++col) {
        const Site s = domain.site(col);
        const auto cw = domain.index(cw_successor(s));
        if (!cw) continue;  // cut by the ambient wall, identical in U and U^(L)
        const Site target = domain.site(*cw);
        if (inner.contains(s) == inner.contains(target)) continue;
        const std::size_t ccw = domain.at(ccw_successor(s));
        detail::push(t, ccw, col, disorder.phase(domain.site(ccw)) * (phi.t() - 1.0));
        detail::push(t, *cw, col, disorder.phase(target) * cplx(0.0, phi.r()));
    }
    return {detail::from_triplets(domain.size(), t), inner, ambient};
}

/// U^(L) = U^{Λ} ⊕ U^{Λ^c} together with V^(L).
inline std::pair<NetworkOperator, CouplingOperator> build_decoupled(const DisorderField& disorder, PhaseAngle phi,
                                                                    const BoxSpec& inner, const BoxSpec& ambient) {
    auto u_dec = build_u(disorder, build_s_decoupled(phi, inner, ambient));
    return {std::move(u_dec), coupling_operator(disorder, phi, inner, ambient)};
}

/// Disordered operator for a geometry: D_ω S(φ) with the geometry's natural boundary.
inline NetworkOperator build_network(const DisorderField& disorder, PhaseAngle phi, const BoxSpec& box) {
    return build_u(disorder, build_s(phi, box));
}

inline DenseMatrix to_dense(const SparseMatrix& m) { return DenseMatrix(m); }

/// ‖U* U - I‖_max.
inline double unitarity_defect(const SparseMatrix& u) {
    SparseMatrix g = SparseMatrix(u.adjoint()) * u;
    double worst = 0.0;
    std::vector<bool> diag_seen(std::size_t(u.cols()), false);
    for (int c = 0; c < g.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(g, c); it; ++it) {
            const bool diag = it.row() == it.col();
            if (diag) diag_seen[std::size_t(c)] = true;
            worst = std::max(worst, std::abs(it.value() - (diag ? cplx(1.0) : cplx(0.0))));
        }
    }
    for (bool seen : diag_seen) {
        if (!seen) worst = std::max(worst, 1.0);
    }
    return worst;
}

/// Largest nonzero count over the columns.
inline int max_column_nonzeros(const SparseMatrix& m) {
    int worst = 0;
    for (int c = 0; c < m.outerSize(); ++c) {
        int count = 0;
        for (SparseMatrix::InnerIterator it(m, c); it; ++it) count += it.value() != cplx(0.0);
        worst = std::max(worst, count);
    }
    return worst;
}

/// Largest |⟨e_α, U e_β⟩| over pairs with |α - β|_∞ > 1 (minimal image on periodic axes).
inline double band_violation(const NetworkOperator& op) {
    double worst = 0.0;
    for (int c = 0; c < op.matrix.outerSize(); ++c) {
        const Site beta = op.domain.site(std::size_t(c));
        for (SparseMatrix::InnerIterator it(op.matrix, c); it; ++it) {
            const Site d = op.geometry().displacement(beta, op.domain.site(std::size_t(it.row())));
            if (std::max(std::abs(d.m), std::abs(d.n)) > 1) worst = std::max(worst, std::abs(it.value()));
        }
    }
    return worst;
}

/// Operator norm as the largest singular value.
inline double spectral_norm(const DenseMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<DenseMatrix> svd(m);
    return svd.singularValues()(0);
}

inline double spectral_norm(const SparseMatrix& m) { return spectral_norm(to_dense(m)); }

// ---------------------------------------------------------------------------
// Sparse-triplet text format
//
//   # ccnet sparse triplet v1
//   dimension <N>
//   phi <φ>
//   boundary <full_torus|walls|complement_walls|decoupled>
//   seed <u64|none>
//   geometry <box|strip|torus> <L1> <L2> <offset_m> <offset_n> <length>
//   nnz <count>
//   <row> <col> <re> <im>        (one line per stored entry, column-major order)
//
// Indices are dense indices in row-major (n, m) order of the geometry.

struct TripletFile {
    std::size_t dimension = 0;
    double phi = 0.0;
    Boundary boundary = Boundary::walls;
    std::optional<std::uint64_t> seed;
    std::optional<BoxSpec> geometry;
    SparseMatrix matrix;
};

inline void write_triplets(std::ostream& os, const NetworkOperator& op) {
    const auto& g = op.geometry();
    os << "# ccnet sparse triplet v1\n";
    os << "dimension " << op.dimension() << '\n';
    os << std::setprecision(17) << "phi " << op.phi.phi << '\n';
    os << "boundary " << to_string(op.boundary) << '\n';
    if (auto s = op.seed()) {
        os << "seed " << *s << '\n';
    } else {
        os << "seed none\n";
    }
    os << "geometry " << to_string(g.mode) << ' ' << g.L1 << ' ' << g.L2 << ' ' << g.offset.m << ' ' << g.offset.n
       << ' ' << g.length << '\n';
    os << "nnz " << op.matrix.nonZeros() << '\n';
    for (int c = 0; c < op.matrix.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(op.matrix, c); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
        }
    }
}

inline TripletFile read_triplets(std::istream& is) {
    TripletFile out;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("triplet file line " + std::to_string(line_no) + ": " + what);
    };
    long nnz = -1;
    while (nnz < 0 && std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "dimension") {
            ls >> out.dimension;
        } else if (key == "phi") {
            ls >> out.phi;
        } else if (key == "boundary") {
            std::string b;
            ls >> b;
            out.boundary = parse_boundary(b);
        } else if (key == "seed") {
            std::string s;
            ls >> s;
            if (s != "none") out.seed = std::stoull(s);
        } else if (key == "geometry") {
            std::string mode;
            BoxSpec g;
            ls >> mode >> g.L1 >> g.L2 >> g.offset.m >> g.offset.n >> g.length;
            g.mode = parse_mode(mode);
            out.geometry = g;
        } else if (key == "nnz") {
            ls >> nnz;
        } else {
            fail("unknown header key '" + key + "'");
        }
        if (ls.fail()) fail("malformed header");
    }
    if (nnz < 0) fail("missing nnz header");
    detail::Triplets t;
    t.reserve(std::size_t(nnz));
    for (long k = 0; k < nnz; ++k) {
        if (!std::getline(is, line)) fail("expected " + std::to_string(nnz) + " entries");
        ++line_no;
        std::istringstream ls(line);
        long r = 0, c = 0;
        double re = 0, im = 0;
        if (!(ls >> r >> c >> re >> im)) fail("malformed entry");
        if (r < 0 || c < 0 || std::size_t(r) >= out.dimension || std::size_t(c) >= out.dimension) {
            fail("index out of range");
        }
        t.emplace_back(int(r), int(c), cplx(re, im));
    }
    out.matrix = detail::from_triplets(out.dimension, t);
    return out;
}

}  // namespace ccnet
