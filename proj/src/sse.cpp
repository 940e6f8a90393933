#include <algorithm>
#include <cmath>
#include <string>

#include "qmeas/errors.hpp"
#include "qmeas/fft.hpp"
#include "qmeas/sse.hpp"
#include "qmeas/util.hpp"

namespace qmeas {

void SseConfig::validate(const Grid& grid) const {
    h.validate();
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(kappa_q >= 0.0) || !(kappa_p >= 0.0)) {
        throw ConfigError("kappa_q and kappa_p must be nonnegative");
    }
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    if (record_every < 1) throw ConfigError("record_every must be at least 1");
    const double lq = std::max(std::abs(grid.spec().x_min), std::abs(grid.spec().x_max));
    const double lp = 0.5 * grid.n() * grid.dp();
    const double load = std::max(kappa_q * lq * lq, kappa_p * lp * lp) * dt;
    if (load >= 0.1) {
        throw ConfigError("stability guard: dt * max(kappa_q Lq^2, kappa_p Lp^2) = " +
                          std::to_string(load) + " exceeds 0.1; reduce dt");
    }
}

WienerPath WienerPath::generate(long long n_steps, double dt, std::uint64_t seed) {
    if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    WienerPath p;
    p.dt = dt;
    p.seed = seed;
    p.db_q.resize(static_cast<std::size_t>(n_steps));
    p.db_p.resize(static_cast<std::size_t>(n_steps));
    Rng rng(seed);
    const double root = std::sqrt(dt);
    for (long long j = 0; j < n_steps; ++j) {
        p.db_q[static_cast<std::size_t>(j)] = root * rng.normal();
        p.db_p[static_cast<std::size_t>(j)] = root * rng.normal();
    }
    return p;
}

namespace {

double quadratic_variation(const std::vector<double>& db) {
    std::vector<double> sq(db.size());
    for (std::size_t j = 0; j < db.size(); ++j) sq[j] = db[j] * db[j];
    return pairwise_sum(sq);
}

}  // namespace

double WienerPath::quadratic_variation_q() const { return quadratic_variation(db_q); }
double WienerPath::quadratic_variation_p() const { return quadratic_variation(db_p); }

void WienerPath::validate() const {
    const double n = static_cast<double>(db_q.size());
    const double band = 5.0 * std::sqrt(2.0 * n) * dt;
    if (std::abs(quadratic_variation_q() - n * dt) > band ||
        std::abs(quadratic_variation_p() - n * dt) > band) {
        throw NumericError("Wiener path quadratic variation leaves the 5 sigma band");
    }
}

SseIntegrator::SseIntegrator(std::shared_ptr<const Grid> grid, SseConfig cfg)
    : grid_(std::move(grid)), cfg_(cfg), prop_(grid_, cfg.h, cfg.dt) {
    cfg_.validate(*grid_);
    spectral_ = cfg_.kappa_p > 0.0;
    const std::size_t n = static_cast<std::size_t>(grid_->n());
    absq_.resize(n);
    if (spectral_) {
        fwd_.resize(2 * n);
        inv_.resize(3 * n);
    }
}

double SseIntegrator::step(WaveFunction& psi, double db_q, double db_p) {
    prop_.apply(psi);

    const int n = grid_->n();
    const double dx = grid_->dx();
    auto& amp = psi.amp();
    const auto& x = grid_->x_nodes();

    for (int k = 0; k < n; ++k) absq_[static_cast<std::size_t>(k)] = std::norm(amp[k]);
    double qmean = 0.0;
    for (int k = 0; k < n; ++k) qmean += x[k] * absq_[static_cast<std::size_t>(k)];
    qmean *= dx;

    const double kq = cfg_.kappa_q;
    const double kp = cfg_.kappa_p;
    const double sq = std::sqrt(2.0 * kq);
    const double sp = std::sqrt(2.0 * kp);

    if (!spectral_) {
        // Only x-diagonal factors: compose them into one pointwise multiplier.
        for (int k = 0; k < n; ++k) {
            const double a = x[k] - qmean;
            amp[k] *= 1.0 - sq * db_q * a - kq * db_q * db_q * a * a;
        }
    } else {
        const std::size_t un = static_cast<std::size_t>(n);
        cplx* psit = fwd_.data();
        cplx* wt = fwd_.data() + un;
        for (int k = 0; k < n; ++k) {
            psit[k] = amp[k];
            wt[k] = (x[k] - qmean) * amp[k];
        }
        fft::forward_many(un, 2, 1, static_cast<std::ptrdiff_t>(un), fwd_.data(), fwd_.data());

        const auto& p = grid_->p_nodes();
        double pmean = 0.0;
        for (int m = 0; m < n; ++m) pmean += p[m] * std::norm(psit[m]);
        pmean *= dx / n;  // (dx^2 dp)/(2 pi hbar) = dx/n for the unscaled transform

        cplx* v1 = inv_.data();            // (A_p psi)~
        cplx* v2 = inv_.data() + un;       // (A_p^2 psi)~
        cplx* v3 = inv_.data() + 2 * un;   // (A_p A_q psi)~
        for (int m = 0; m < n; ++m) {
            const double b = p[m] - pmean;
            v1[m] = b * psit[m];
            v2[m] = b * b * psit[m];
            v3[m] = b * wt[m];
        }
        fft::inverse_many(un, 3, 1, static_cast<std::ptrdiff_t>(un), inv_.data(), inv_.data());

        const double cq1 = sq * db_q;
        const double cq2 = kq * db_q * db_q;
        const double cp1 = sp * db_p;
        const double cp2 = kp * db_p * db_p;
        const double cqp = 0.5 * sq * sp * db_q * db_p;
        for (int k = 0; k < n; ++k) {
            const double a = x[k] - qmean;
            amp[k] -= (cq1 * a + cq2 * a * a) * amp[k] + (cp1 + cqp * a) * v1[k] +
                      cp2 * v2[k] + cqp * v3[k];
        }
    }

    double nsq = 0.0;
    for (int k = 0; k < n; ++k) nsq += std::norm(amp[k]);
    nsq *= dx;
    const double defect = std::abs(nsq - 1.0);
    if (cfg_.renormalize) {
        if (!(nsq > 0.0) || !std::isfinite(nsq)) {
            throw NumericError("state norm underflowed during an SSE step");
        }
        const double inv_norm = 1.0 / std::sqrt(nsq);
        for (int k = 0; k < n; ++k) amp[k] *= inv_norm;
    }
    return defect;
}

double norm_defect(const WaveFunction& pre, const WaveFunction& post) {
    (void)pre;
    const double nrm = post.norm();
    return std::abs(nrm * nrm - 1.0);
}

namespace {

using Vec = std::vector<cplx>;

cplx inner(const Vec& a, const Vec& b, double dx) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += std::conj(a[j]) * b[j];
    return acc * dx;
}

Vec apply_x_power(const Vec& v, const Grid& g, int power) {
    Vec out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        double f = 1.0;
        for (int r = 0; r < power; ++r) f *= g.x_nodes()[j];
        out[j] = f * v[j];
    }
    return out;
}

Vec apply_p_power(const Vec& v, const Grid& g, int power) {
    Vec out(v.size());
    fft::forward(out.size(), v.data(), out.data());
    for (std::size_t m = 0; m < out.size(); ++m) {
        double f = 1.0;
        for (int r = 0; r < power; ++r) f *= g.p_nodes()[m];
        out[m] *= f;
    }
    fft::inverse(out.size(), out.data(), out.data());
    return out;
}

Vec apply_h(const Vec& v, const Grid& g, const HamiltonianSpec& h) {
    Vec out(v.size(), cplx(0.0));
    if (h.has_kinetic()) {
        out = apply_p_power(v, g, 2);
        const double c = 0.5 / h.mass;
        for (auto& z : out) z *= c;
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
        out[j] += h.potential(g.x_nodes()[j]) * v[j];
    }
    return out;
}

}  // namespace

double lindblad_drift(const WaveFunction& psi, LindbladObservable y, const SseConfig& cfg) {
    cfg.h.validate();
    const Grid& g = psi.grid();
    const double dx = g.dx();
    const double hbar = g.hbar();
    const Vec& v = psi.amp();

    auto apply_y = [&](const Vec& in) -> Vec {
        switch (y) {
            case LindbladObservable::Q: return apply_x_power(in, g, 1);
            case LindbladObservable::P: return apply_p_power(in, g, 1);
            case LindbladObservable::Q2: return apply_x_power(in, g, 2);
            case LindbladObservable::P2: return apply_p_power(in, g, 2);
            case LindbladObservable::H: return apply_h(in, g, cfg.h);
        }
        throw ConfigError("unsupported Lindblad observable");
    };

    const Vec yv = apply_y(v);
    const Vec hv = apply_h(v, g, cfg.h);
    double drift = 2.0 / hbar * std::imag(inner(yv, hv, dx));

    if (cfg.kappa_q > 0.0) {
        const Vec u = apply_x_power(v, g, 1);
        const Vec u2 = apply_x_power(v, g, 2);
        const Vec yu = apply_y(u);
        drift += cfg.kappa_q *
                 (2.0 * std::real(inner(u, yu, dx)) - 2.0 * std::real(inner(yv, u2, dx)));
    }
    if (cfg.kappa_p > 0.0) {
        const Vec w = apply_p_power(v, g, 1);
        const Vec w2 = apply_p_power(v, g, 2);
        const Vec yw = apply_y(w);
        drift += cfg.kappa_p *
                 (2.0 * std::real(inner(w, yw, dx)) - 2.0 * std::real(inner(yv, w2, dx)));
    }
    return drift;
}

TrajectoryResult run_sse_trajectory(WaveFunction& psi, const SseConfig& cfg) {
    const WienerPath path = WienerPath::generate(cfg.n_steps, cfg.dt, cfg.seed);
    return run_sse_trajectory(psi, cfg, path);
}

TrajectoryResult run_sse_trajectory(WaveFunction& psi, const SseConfig& cfg,
                                    const WienerPath& path) {
    if (static_cast<long long>(path.db_q.size()) < cfg.n_steps ||
        static_cast<long long>(path.db_p.size()) < cfg.n_steps) {
        throw ConfigError("Wiener path is shorter than n_steps");
    }
    SseIntegrator integ(psi.grid_ptr(), cfg);
    TrajectoryResult result;
    auto record = [&](double t) {
        TrajectoryPoint pt;
        pt.t = t;
        pt.moments = psi.moments();
        pt.energy = integ.propagator().energy(psi);
        result.points.push_back(pt);
    };
    record(0.0);
    for (long long j = 1; j <= cfg.n_steps; ++j) {
        const std::size_t idx = static_cast<std::size_t>(j - 1);
        try {
            integ.step(psi, path.db_q[idx], path.db_p[idx]);
            if (auto violation = psi.boundary_violation()) {
                throw NumericError(*violation);
            }
        } catch (const ConfigError& e) {
            throw ConfigError("trajectory step " + std::to_string(j) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("trajectory step " + std::to_string(j) + ": " + e.what());
        }
        if (j % cfg.record_every == 0 || j == cfg.n_steps) {
            record(static_cast<double>(j) * cfg.dt);
        }
    }
    return result;
}

}  // namespace qmeas
