#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ccnet/disorder.hpp"
#include "ccnet/errors.hpp"
#include "ccnet/operator.hpp"
#include "ccnet/parallel.hpp"
#include "ccnet/random.hpp"

namespace ccnet {

inline constexpr std::size_t kDenseLimit = 2048;

struct Spectrum {
    std::vector<cplx> eigenvalues;
    std::optional<DenseMatrix> eigenvectors;  // columns, unitary
    BoxSpec geometry;
    double phi = 0.0;
    std::optional<std::uint64_t> seed;
};

/// Eigenpairs of a dense unitary via the complex Schur form. For a normal
/// matrix the triangular factor is diagonal and the Schur vectors are an
/// orthonormal eigenbasis, also inside degenerate eigenspaces.
inline std::pair<std::vector<cplx>, DenseMatrix> unitary_eigen(const DenseMatrix& u, bool vectors = true) {
    Eigen::ComplexSchur<DenseMatrix> schur(u, vectors);
    if (schur.info() != Eigen::Success) {
        throw NumericalError("Schur decomposition did not converge (dimension " + std::to_string(u.rows()) + ")");
    }
    const DenseMatrix& t = schur.matrixT();
    double offdiag = 0.0;
    double modulus_defect = 0.0;
    std::vector<cplx> values(std::size_t(t.rows()));
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        values[std::size_t(i)] = t(i, i);
        modulus_defect = std::max(modulus_defect, std::abs(std::abs(t(i, i)) - 1.0));
        for (Eigen::Index j = i + 1; j < t.cols(); ++j) offdiag = std::max(offdiag, std::abs(t(i, j)));
    }
    if (offdiag > 1e-8 || modulus_defect > 1e-8) {
        std::ostringstream msg;
        msg << "matrix is not numerically unitary: max |T_ij| (i<j) = " << offdiag
            << ", max ||λ|-1| = " << modulus_defect;
        throw NumericalError(msg.str());
    }
    DenseMatrix q;
    if (vectors) {
        q = schur.matrixU();
        const double defect = (q.adjoint() * q - DenseMatrix::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff();
        if (defect > 1e-8) throw NumericalError("eigenbasis not orthonormal, defect " + std::to_string(defect));
    }
    return {std::move(values), std::move(q)};
}

inline Spectrum diagonalize(const NetworkOperator& op, bool vectors = true, std::size_t dense_limit = kDenseLimit) {
    if (op.dimension() > dense_limit) {
        throw NumericalError("dimension " + std::to_string(op.dimension()) + " exceeds the dense eigensolver limit " +
                             std::to_string(dense_limit));
    }
    auto [values, q] = unitary_eigen(to_dense(op.matrix), vectors);
    Spectrum s{std::move(values), std::nullopt, op.geometry(), op.phi.phi, op.seed()};
    if (vectors) s.eigenvectors = std::move(q);
    return s;
}

/// Spectrum of U_ω(0) without diagonalization: on each counterclockwise block
/// (D S)^4 = det(D_block) I, so the block contributes d^{1/4} i^m, m = 0..3.
inline Spectrum phi0_spectrum(const DisorderField& disorder, const BoxSpec& box) {
    IndexMap map(box);
    Spectrum out{{}, std::nullopt, box, 0.0, disorder.seed()};
    out.eigenvalues.reserve(map.size());
    for (const auto& s : map.sites()) {
        if (!is_even(s.m) || !is_even(s.n)) continue;
        cplx det = 1.0;
        for (const auto& b : block_sites(block_of(s, Chirality::counterclockwise))) det *= disorder.phase(b);
        const cplx root = std::polar(1.0, std::arg(det) / 4.0);
        for (cplx q : {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)}) out.eigenvalues.push_back(root * q);
    }
    return out;
}

inline double distance_to_spectrum(cplx z, const std::vector<cplx>& eigenvalues) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : eigenvalues) best = std::min(best, std::abs(l - z));
    return best;
}

struct GapEvent {
    cplx z;
    double eta = 0.0;
    bool hit = false;  // dist(z, σ) <= η
};

inline GapEvent gap_event(cplx z, double eta, const Spectrum& spectrum) {
    return {z, eta, distance_to_spectrum(z, spectrum.eigenvalues) <= eta};
}

/// Largest eigenvalue mismatch between two spectra after sorting by angle and
/// aligning cyclically (eigenvalues straddling angle 0 may swap ends).
inline double spectrum_mismatch(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    if (a.empty()) return 0.0;
    auto by_angle = [](cplx x, cplx y) {
        auto key = [](cplx v) {
            const double t = std::arg(v);
            return t < 0 ? t + 2 * std::numbers::pi : t;
        };
        return key(x) < key(y);
    };
    std::sort(a.begin(), a.end(), by_angle);
    std::sort(b.begin(), b.end(), by_angle);
    const long n = long(a.size());
    double best = std::numeric_limits<double>::infinity();
    for (long shift = -4; shift <= 4; ++shift) {
        double worst = 0.0;
        for (long i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[std::size_t(i)] - b[std::size_t(((i + shift) % n + n) % n)]));
        best = std::min(best, worst);
    }
    return best;
}

/// Normalized Lebesgue measure of B_η(z) ∩ T.
inline double arc_measure(cplx z, double eta) {
    const double rho = std::abs(z);
    if (eta <= std::abs(1.0 - rho)) return 0.0;
    if (eta >= 1.0 + rho) return 1.0;
    const double c = std::clamp((1.0 + rho * rho - eta * eta) / (2.0 * rho), -1.0, 1.0);
    return std::acos(c) / std::numbers::pi;
}

struct GapEstimate {
    double hit = 0.0;  // frequency of dist(z, σ) <= η
    double std_error = 0.0;
    std::size_t trials = 0;
    double arc = 0.0;                // ℓ(B_η(z) ∩ T)
    double exact_no_hit = 0.0;       // (1 - 4ℓ)^N
    double no_hit_lower_bound = 0.0; // (1 - 2η)^N
    bool small_eta_vol = false;      // η·vol < 1, where the O(η vol) hit bound applies

    double no_hit() const { return 1.0 - hit; }
};

struct GapRequest {
    cplx z{1.0, 0.0};
    double eta = 0.1;
    BoxSpec box = BoxSpec::box(1, 1);
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/// Exact P(dist(z, σ(U(0))) > η) over N blocks when B_η(z) ∩ T is a proper arc of measure ℓ < 1/4.
inline double exact_gap_no_hit(cplx z, double eta, std::size_t blocks) {
    return std::pow(1.0 - 4.0 * arc_measure(z, eta), double(blocks));
}

/// Monte Carlo frequency of the event dist(z, σ(U^{Λ}_ω(0))) <= η.
inline GapEstimate gap_probability_mc(const GapRequest& req) {
    if (!(req.eta > 0.0)) throw ConfigError("eta must be positive");
    if (req.trials < 100) throw ConfigError("gap experiment needs at least 100 trials");
    const std::size_t blocks = req.box.block_count();
    if (std::abs(1.0 - std::abs(req.z)) > req.eta) {
        throw ConfigError("B_eta(z) does not meet the unit circle (|1-|z|| > eta); regime excluded");
    }
    const double arc = arc_measure(req.z, req.eta);
    if (arc >= 0.25) throw ConfigError("arc measure >= 1/4: product formula regime violated");

    auto hits = run_trials(req.trials, req.workers, [&](std::size_t t) -> int {
        const auto omega = DisorderField::sample(derive_seed(req.seed, t), req.box);
        return gap_event(req.z, req.eta, phi0_spectrum(omega, req.box)).hit ? 1 : 0;
    });
    GapEstimate est;
    est.trials = req.trials;
    std::size_t count = 0;
    for (int h : hits) count += std::size_t(h);
    est.hit = double(count) / double(req.trials);
    est.std_error = std::sqrt(est.hit * (1.0 - est.hit) / double(req.trials));
    est.arc = arc;
    est.exact_no_hit = exact_gap_no_hit(req.z, req.eta, blocks);
    est.no_hit_lower_bound = std::pow(std::max(0.0, 1.0 - 2.0 * req.eta), double(blocks));
    est.small_eta_vol = req.eta * double(blocks) < 1.0;
    return est;
}

}  // namespace ccnet
