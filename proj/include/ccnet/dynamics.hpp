#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccnet/disorder.hpp"
#include "ccnet/errors.hpp"
#include "ccnet/operator.hpp"
#include "ccnet/parallel.hpp"
#include "ccnet/random.hpp"

namespace ccnet {

struct StateVector {
    BoxSpec geometry;
    Vector amplitudes;

    double norm() const { return amplitudes.norm(); }
};

inline StateVector localized_state(const BoxSpec& box, Site site) {
    const IndexMap map(box);
    StateVector psi{box, Vector::Zero(Eigen::Index(map.size()))};
    psi.amplitudes(Eigen::Index(map.at(site))) = 1.0;
    return psi;
}

/// Initial state from "m n re im" rows; blank lines and '#' comments are skipped.
inline StateVector read_state(std::istream& is, const BoxSpec& box) {
    const IndexMap map(box);
    StateVector psi{box, Vector::Zero(Eigen::Index(map.size()))};
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::istringstream ls(line);
        Site s;
        double re = 0, im = 0;
        if (!(ls >> s.m >> s.n >> re >> im)) throw ConfigError("malformed state row (expected 'm n re im')", line_no);
        const auto i = map.index(s);
        if (!i) throw ConfigError("state site " + to_string(s) + " is outside the geometry", line_no);
        psi.amplitudes(Eigen::Index(*i)) += cplx(re, im);
    }
    return psi;
}

/// U^n ψ; negative `steps` apply the adjoint.
inline StateVector evolve(const NetworkOperator& op, StateVector psi, long steps) {
    if (psi.geometry != op.geometry() || op.domain.excluded() || std::size_t(psi.amplitudes.size()) != op.dimension()) {
        throw GeometryError("state and operator geometries differ");
    }
    if (steps == 0) return psi;
    Vector next(psi.amplitudes.size());
    if (steps > 0) {
        for (long k = 0; k < steps; ++k) {
            next.noalias() = op.matrix * psi.amplitudes;
            psi.amplitudes.swap(next);
        }
    } else {
        const SparseMatrix adj = op.matrix.adjoint();
        for (long k = 0; k < -steps; ++k) {
            next.noalias() = adj * psi.amplitudes;
            psi.amplitudes.swap(next);
        }
    }
    return psi;
}

/// Weights |μ|^{2p} for μ in the geometry, positions measured from the lattice origin.
inline Eigen::VectorXd position_weights(const BoxSpec& box, double p) {
    const IndexMap map(box);
    Eigen::VectorXd w(Eigen::Index(map.size()));
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Site s = map.site(i);
        w(Eigen::Index(i)) = std::pow(double(s.m) * s.m + double(s.n) * s.n, p);
    }
    return w;
}

/// ‖ |X|^p ψ ‖.
inline double moment(const StateVector& psi, double p) {
    if (p < 0) throw ConfigError("moment order p must be nonnegative");
    const auto w = position_weights(psi.geometry, p);
    return std::sqrt((w.array() * psi.amplitudes.array().abs2()).sum());
}

/// Mask of sites within `band` of the rectangle edge along periodic directions,
/// where amplitude would wrap around the geometry.
inline Eigen::VectorXd seam_mask(const BoxSpec& box, int band) {
    const IndexMap map(box);
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(Eigen::Index(map.size()));
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Site s = map.site(i);
        const bool near_x = box.periodic_x() && (s.m < box.x_min() + band || s.m > box.x_max() - band);
        const bool near_y = box.periodic_y() && (s.n < box.y_min() + band || s.n > box.y_max() - band);
        if (near_x || near_y) mask(Eigen::Index(i)) = 1.0;
    }
    return mask;
}

struct SpreadSeries {
    std::uint64_t seed = 0;
    double phi = 0.0;
    double p = 2.0;
    std::vector<double> moment;   // ‖|X|^p ψ_n‖, n = 0..T
    std::vector<double> leakage;  // probability mass in the seam band
    double max_norm_drift = 0.0;
    bool leaked = false;          // leakage exceeded the threshold at some n
    long first_contact = -1;      // first n with nonzero mass in the seam band
};

struct SpreadRequest {
    double phi = 0.05;
    BoxSpec torus = BoxSpec::torus(16, 16);
    double p = 2.0;
    long horizon = 2000;
    std::size_t seeds = 32;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::optional<StateVector> initial;  // default e_(0,0)
    double leak_threshold = 1e-6;
    int seam_band = 2;
};

/// Evolution of one disorder realization, recording the moment and the seam leakage.
inline SpreadSeries spread_run(const NetworkOperator& u, const StateVector& psi0, double p, long horizon,
                               double leak_threshold, int band) {
    const auto w = position_weights(u.geometry(), p);
    const auto mask = seam_mask(u.geometry(), band);
    const double norm0 = psi0.norm();
    SpreadSeries out;
    out.seed = u.seed().value_or(0);
    out.phi = u.phi.phi;
    out.p = p;
    out.moment.reserve(std::size_t(horizon) + 1);
    out.leakage.reserve(std::size_t(horizon) + 1);
    Vector psi = psi0.amplitudes;
    Vector next(psi.size());
    for (long n = 0; n <= horizon; ++n) {
        const Eigen::VectorXd prob = psi.array().abs2();
        out.moment.push_back(std::sqrt(w.dot(prob)));
        const double leak = mask.dot(prob);
        out.leakage.push_back(leak);
        if (leak > 0.0 && out.first_contact < 0) out.first_contact = n;
        if (leak > leak_threshold) out.leaked = true;
        out.max_norm_drift = std::max(out.max_norm_drift, std::abs(std::sqrt(prob.sum()) - norm0));
        if (n == horizon) break;
        next.noalias() = u.matrix * psi;
        psi.swap(next);
    }
    return out;
}

/// Per-seed series of ‖|X|^p U^n ψ0‖ on the torus; seed i uses derive_seed(seed, i).
inline std::vector<SpreadSeries> spread_experiment(const SpreadRequest& req) {
    if (req.p < 0) throw ConfigError("p must be nonnegative");
    if (req.horizon < 0) throw ConfigError("horizon must be nonnegative");
    const StateVector psi0 = req.initial.value_or(localized_state(req.torus, {0, 0}));
    if (psi0.geometry != req.torus) throw GeometryError("initial state geometry differs from the torus");
    const auto s_op = build_s({req.phi}, req.torus);
    return run_trials(req.seeds, req.workers, [&](std::size_t i) {
        const auto u = build_u(DisorderField::sample(derive_seed(req.seed, i), req.torus), s_op);
        return spread_run(u, psi0, req.p, req.horizon, req.leak_threshold, req.seam_band);
    });
}

struct PlateauSummary {
    std::vector<double> median_series;  // per-time median over non-leaked seeds
    double early_max = 0.0;             // max of the median series over n in [0, T/2]
    double late_max = 0.0;              // max over n in [T/2, T]
    double ratio = 0.0;                 // late_max / early_max
    double median_final = 0.0;
    std::size_t leaked = 0;
    std::size_t used = 0;
};

inline PlateauSummary summarize_plateau(const std::vector<SpreadSeries>& runs) {
    PlateauSummary sum;
    std::vector<const SpreadSeries*> ok;
    for (const auto& r : runs) {
        if (r.leaked) {
            ++sum.leaked;
        } else {
            ok.push_back(&r);
        }
    }
    sum.used = ok.size();
    if (ok.empty()) return sum;
    const std::size_t len = ok.front()->moment.size();
    sum.median_series.resize(len);
    std::vector<double> column(ok.size());
    for (std::size_t n = 0; n < len; ++n) {
        for (std::size_t k = 0; k < ok.size(); ++k) column[k] = ok[k]->moment[n];
        sum.median_series[n] = median(column);
    }
    const std::size_t half = (len - 1) / 2;
    sum.early_max = *std::max_element(sum.median_series.begin(), sum.median_series.begin() + std::ptrdiff_t(half) + 1);
    sum.late_max = *std::max_element(sum.median_series.begin() + std::ptrdiff_t(half), sum.median_series.end());
    sum.ratio = sum.early_max > 0 ? sum.late_max / sum.early_max : 0.0;
    sum.median_final = sum.median_series.back();
    return sum;
}

}  // namespace ccnet
