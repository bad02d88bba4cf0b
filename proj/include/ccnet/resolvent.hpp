#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>
#include <boost/math/distributions/students_t.hpp>

#include "ccnet/disorder.hpp"
#include "ccnet/errors.hpp"
#include "ccnet/operator.hpp"
#include "ccnet/parallel.hpp"
#include "ccnet/random.hpp"
#include "ccnet/spectral.hpp"

namespace ccnet {

/// z = ρ e^{iθ} off the unit circle.
struct SpectralParameter {
    double rho = 1.1;
    double theta = 0.0;

    cplx z() const { return std::polar(rho, theta); }
    double distance_to_circle() const { return std::abs(rho - 1.0); }

    void validate() const {
        if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive and finite");
        if (rho == 1.0) throw ConfigError("z must lie off the unit circle (rho != 1)");
    }
};

/// Sparse LU factorization of U - z, reused for every right-hand side.
class ResolventSolver {
public:
    ResolventSolver(const SparseMatrix& u, cplx z) : a_(u), z_(z) {
        SparseMatrix id(u.rows(), u.cols());
        id.setIdentity();
        a_ = u - z * id;
        a_.makeCompressed();
        lu_.compute(a_);
        if (lu_.info() != Eigen::Success) {
            throw NumericalError("LU factorization of U - z failed at z = (" + std::to_string(z.real()) + ", " +
                                 std::to_string(z.imag()) + "): " + lu_.lastErrorMessage());
        }
    }

    /// Column ν of the resolvent, i.e. the solution of (U - z) x = e_ν. The
    /// residual must satisfy ‖(U - z)x - e_ν‖ <= 1e-10 max(1, ‖x‖); one step of
    /// iterative refinement is attempted before reporting failure.
    Vector column(std::size_t nu) const {
        Vector e = Vector::Zero(a_.rows());
        e(Eigen::Index(nu)) = 1.0;
        Vector x = lu_.solve(e);
        double res = residual(x, e);
        if (!(res <= tolerance(x))) {
            x += lu_.solve(Vector(e - a_ * x));
            res = residual(x, e);
        }
        if (!(res <= tolerance(x)) || !x.allFinite()) {
            throw NumericalError("near-singular resolvent solve: residual " + std::to_string(res) + ", |x| = " +
                                 std::to_string(x.norm()) + ", |z| = " + std::to_string(std::abs(z_)));
        }
        return x;
    }

    cplx element(std::size_t mu, std::size_t nu) const { return column(nu)(Eigen::Index(mu)); }

private:
    double residual(const Vector& x, const Vector& e) const { return (a_ * x - e).norm(); }
    static double tolerance(const Vector& x) { return 1e-10 * std::max(1.0, x.norm()); }

    SparseMatrix a_;
    cplx z_;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

/// ⟨e_μ, (U - z)^{-1} e_ν⟩.
inline cplx resolvent_element(const NetworkOperator& op, cplx z, Site mu, Site nu) {
    if (std::abs(std::abs(z) - 1.0) == 0.0) throw ConfigError("z must lie off the unit circle");
    ResolventSolver solver(op.matrix, z);
    return solver.element(op.domain.at(mu), op.domain.at(nu));
}

struct SitePair {
    Site mu;
    Site nu;
};

struct MomentRecord {
    Site mu;
    Site nu;
    double s = 0.5;
    SpectralParameter z;
    double phi = 0.0;
    double distance = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
    std::size_t dropped = 0;
};

struct MomentRequest {
    double phi = 0.0;
    SpectralParameter z;
    double s = 0.5;
    std::vector<SitePair> pairs;
    BoxSpec box = BoxSpec::box(2, 2);
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/// Monte Carlo E|⟨e_μ, R(φ, z) e_ν⟩|^s per pair. Trial t uses the disorder
/// seeded by derive_seed(seed, t); failed solves drop the trial and are counted.
inline std::vector<MomentRecord> fractional_moment_mc(const MomentRequest& req) {
    if (!(req.s > 0.0 && req.s < 1.0)) throw ConfigError("s must lie in (0, 1)");
    if (req.trials < 100) throw ConfigError("fractional moments need at least 100 trials");
    req.z.validate();
    const IndexMap domain(req.box);
    std::vector<std::size_t> mu_idx;
    std::vector<std::size_t> nu_slot;
    std::vector<std::size_t> nus;
    for (const auto& p : req.pairs) {
        mu_idx.push_back(domain.at(p.mu));
        const std::size_t nu = domain.at(p.nu);
        auto it = std::find(nus.begin(), nus.end(), nu);
        nu_slot.push_back(std::size_t(it - nus.begin()));
        if (it == nus.end()) nus.push_back(nu);
    }
    const auto s_op = build_s({req.phi}, req.box);
    auto samples = run_trials(req.trials, req.workers, [&](std::size_t t) -> std::optional<std::vector<double>> {
        const auto u = build_u(DisorderField::sample(derive_seed(req.seed, t), req.box), s_op);
        try {
            ResolventSolver solver(u.matrix, req.z.z());
            std::vector<Vector> cols;
            cols.reserve(nus.size());
            for (auto nu : nus) cols.push_back(solver.column(nu));
            std::vector<double> v(req.pairs.size());
            for (std::size_t k = 0; k < v.size(); ++k) {
                v[k] = std::pow(std::abs(cols[nu_slot[k]](Eigen::Index(mu_idx[k]))), req.s);
            }
            return v;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    });
    std::vector<MomentRecord> out;
    for (std::size_t k = 0; k < req.pairs.size(); ++k) {
        std::vector<double> values;
        values.reserve(samples.size());
        for (const auto& smp : samples) {
            if (smp) values.push_back((*smp)[k]);
        }
        const auto est = batch_means(values);
        out.push_back({req.pairs[k].mu, req.pairs[k].nu, req.s, req.z, req.phi,
                       req.box.distance(req.pairs[k].mu, req.pairs[k].nu), est.mean, est.std_error, values.size(),
                       samples.size() - values.size()});
    }
    return out;
}

/// Eigenfunction correlator Q(μ, ν) = Σ_k |⟨e_μ, ψ_k⟩| |⟨ψ_k, e_ν⟩| from an
/// orthonormal eigenbasis; for a finite unitary this is the supremum of
/// |⟨e_μ, f(U) e_ν⟩| over continuous f with ‖f‖_∞ <= 1.
inline Eigen::MatrixXd correlator(const Spectrum& spectrum) {
    if (!spectrum.eigenvectors) throw NumericalError("correlator needs eigenvectors");
    const Eigen::MatrixXd a = spectrum.eigenvectors->cwiseAbs();
    return a * a.transpose();
}

inline Eigen::MatrixXd correlator(const NetworkOperator& op) { return correlator(diagonalize(op, true)); }

/// Row μ of the correlator, without forming the full matrix.
inline Eigen::VectorXd correlator_row(const Spectrum& spectrum, std::size_t mu) {
    if (!spectrum.eigenvectors) throw NumericalError("correlator needs eigenvectors");
    const Eigen::MatrixXd a = spectrum.eigenvectors->cwiseAbs();
    return a * a.row(Eigen::Index(mu)).transpose();
}

struct DistanceSample {
    double distance = 0.0;
    double value = 0.0;
};

struct DecayBin {
    int distance = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

struct DecayFit {
    double g = 0.0;  // decay rate
    double c = 0.0;  // prefactor
    double r_squared = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int d_min = 0;
    int d_max = 0;
    std::vector<DecayBin> bins;  // bins entering the fit
    std::vector<std::string> warnings;
};

struct FitOptions {
    int d_min = 0;
    int d_max = 1 << 20;
    std::size_t min_bins = 4;
    std::size_t min_samples = 30;
    double confidence = 0.95;
};

/// Least-squares fit of log(mean) = log c - g d over distance bins (Euclidean
/// distance rounded to the nearest integer).
inline DecayFit fit_decay(const std::vector<DistanceSample>& samples, const FitOptions& opt = {}) {
    std::map<int, std::vector<double>> grouped;
    for (const auto& s : samples) {
        const int d = int(std::lround(s.distance));
        if (d >= opt.d_min && d <= opt.d_max) grouped[d].push_back(s.value);
    }
    DecayFit fit;
    for (auto& [d, values] : grouped) {
        if (values.size() < opt.min_samples) {
            fit.warnings.push_back("distance " + std::to_string(d) + " has only " + std::to_string(values.size()) +
                                   " samples; excluded");
            continue;
        }
        const auto est = batch_means(values);
        if (!(est.mean > 0.0) || !std::isfinite(est.mean)) {
            fit.warnings.push_back("distance " + std::to_string(d) + " has non-positive mean; excluded");
            continue;
        }
        fit.bins.push_back({d, est.mean, est.std_error, values.size()});
    }
    const std::size_t k = fit.bins.size();
    if (k < opt.min_bins) {
        throw NumericalError("decay fit needs at least " + std::to_string(opt.min_bins) + " usable distance bins, got " +
                             std::to_string(k));
    }
    double sx = 0, sy = 0;
    for (const auto& b : fit.bins) {
        sx += b.distance;
        sy += std::log(b.mean);
    }
    const double mx = sx / double(k);
    const double my = sy / double(k);
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& b : fit.bins) {
        const double dx = b.distance - mx;
        const double dy = std::log(b.mean) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0;
    for (const auto& b : fit.bins) {
        const double r = std::log(b.mean) - (intercept + slope * b.distance);
        ss_res += r * r;
    }
    fit.g = -slope;
    fit.c = std::exp(intercept);
    fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    const double se = std::sqrt(ss_res / double(k - 2) / sxx);
    boost::math::students_t dist(double(k - 2));
    const double tq = boost::math::quantile(boost::math::complement(dist, (1.0 - opt.confidence) / 2.0));
    fit.ci_low = fit.g - tq * se;
    fit.ci_high = fit.g + tq * se;
    fit.d_min = fit.bins.front().distance;
    fit.d_max = fit.bins.back().distance;
    return fit;
}

/// Sites origin + k·dir for the eight axis and diagonal directions, with
/// rounded Euclidean distance in [1, max_distance]. Periodic directions use
/// minimal-image distances; sites leaving the geometry are skipped.
inline std::vector<Site> ray_sites(const BoxSpec& box, Site origin, int max_distance) {
    std::vector<Site> out;
    const IndexMap map(box);
    for (const auto& dir : kUnitNeighbors) {
        for (int k = 1;; ++k) {
            const Site raw{origin.m + k * dir.m, origin.n + k * dir.n};
            if (std::lround(euclidean_norm(raw - origin)) > max_distance) break;
            const auto c = box.canonical(raw);
            if (!c) break;
            if (std::find(out.begin(), out.end(), *c) == out.end() && *c != origin) out.push_back(*c);
        }
    }
    return out;
}

struct ContractionRequest {
    double phi = 0.05;
    int L1 = 3;
    int L2 = 3;
    Site mu{0, 0};
    std::optional<Site> nu;             // default: 4 sites left of the inner box
    std::optional<BoxSpec> ambient;     // default: torus with three blocks of margin
    double s = 0.5;
    SpectralParameter z{1.05, 0.3};
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct ContractionReport {
    double lhs = 0.0;
    double lhs_std_error = 0.0;
    double rhs = 0.0;
    Site rhs_site;
    double q_hat = 0.0;
    std::size_t trials = 0;
    std::size_t dropped = 0;
    std::size_t ring_size = 0;
    BoxSpec inner;
    BoxSpec ambient;
    Site nu;
};

/// Empirical contraction ratio
///   q̂ = E|R(μ,ν)|^s / max_{β ∈ N(∂((Λ_L + [μ])^c))} E|R(β,ν)|^s
/// for the full resolvent on an ambient torus.
inline ContractionReport iteration_contraction_check(const ContractionRequest& req) {
    if (!(req.s > 0.0 && req.s < 1.0)) throw ConfigError("s must lie in (0, 1)");
    req.z.validate();
    const Site anchor = block_anchor(req.mu);
    const BoxSpec inner = BoxSpec::box(req.L1, req.L2, anchor);
    const BoxSpec ambient = req.ambient.value_or(BoxSpec::torus(req.L1 + 3, req.L2 + 3, anchor));
    const Site nu = req.nu.value_or(Site{inner.x_min() - 4, anchor.n});
    if (!in_complement_interior(inner, nu)) throw GeometryError("nu must lie in the interior of the box complement");
    const IndexMap domain(ambient);
    if (!domain.contains(nu)) throw GeometryError("nu lies outside the ambient geometry");
    const SiteSet ring = neighborhood(complement_boundary(inner));
    std::vector<Site> betas;
    std::vector<std::size_t> beta_idx;
    for (const auto& b : ring) {
        if (!ambient.contains(b)) throw GeometryError("ambient geometry too small for the contraction ring");
        betas.push_back(b);
        beta_idx.push_back(domain.at(b));
    }
    const std::size_t mu_i = domain.at(req.mu);
    const std::size_t nu_i = domain.at(nu);
    const auto s_op = build_s({req.phi}, ambient);

    auto samples = run_trials(req.trials, req.workers, [&](std::size_t t) -> std::optional<std::vector<double>> {
        const auto u = build_u(DisorderField::sample(derive_seed(req.seed, t), ambient), s_op);
        try {
            const Vector col = ResolventSolver(u.matrix, req.z.z()).column(nu_i);
            std::vector<double> v(betas.size() + 1);
            v[0] = std::pow(std::abs(col(Eigen::Index(mu_i))), req.s);
            for (std::size_t k = 0; k < betas.size(); ++k) v[k + 1] = std::pow(std::abs(col(Eigen::Index(beta_idx[k]))), req.s);
            return v;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    });

    ContractionReport rep;
    rep.inner = inner;
    rep.ambient = ambient;
    rep.nu = nu;
    rep.ring_size = betas.size();
    std::vector<std::vector<double>> cols(betas.size() + 1);
    for (const auto& smp : samples) {
        if (!smp) {
            ++rep.dropped;
            continue;
        }
        for (std::size_t k = 0; k < smp->size(); ++k) cols[k].push_back((*smp)[k]);
    }
    rep.trials = samples.size() - rep.dropped;
    const auto lhs = batch_means(cols[0]);
    rep.lhs = lhs.mean;
    rep.lhs_std_error = lhs.std_error;
    for (std::size_t k = 0; k < betas.size(); ++k) {
        const double m = batch_means(cols[k + 1]).mean;
        if (k == 0 || m > rep.rhs) {
            rep.rhs = m;
            rep.rhs_site = betas[k];
        }
    }
    rep.q_hat = rep.lhs == 0.0 ? 0.0 : rep.lhs / rep.rhs;
    return rep;
}

}  // namespace ccnet
