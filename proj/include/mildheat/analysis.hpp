#ifndef MILDHEAT_ANALYSIS_HPP
#define MILDHEAT_ANALYSIS_HPP

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "errors.hpp"
#include "point.hpp"
#include "quadrature.hpp"

namespace mildheat {

// eta and its first two derivatives at one point.
struct EtaJet {
	double value = 0;
	double d1 = 0;
	double d2 = 0;
	bool clamped = false;  // value fell below exp(-700) and was set to 0
};

inline constexpr double kEtaFloor = 1.0142320547350045e-304;  // exp(-700)

// eta = f(2-s)/(f(2-s)+f(s-1)), f(u) = exp(-1/u) for u > 0.
// Written as 1/(1+e^g) with g = 1/(2-s) - 1/(s-1), so eta' = -eta(1-eta) g'.
inline EtaJet eta_jet(double s) {
	if (std::isnan(s)) throw InvalidArgument("eta of NaN");
	if (s <= 1) return EtaJet{1, 0, 0, false};
	if (s >= 2) return EtaJet{0, 0, 0, false};
	const double u = s - 1, v = 2 - s;
	const double g = 1 / v - 1 / u;
	const double g1 = 1 / (v * v) + 1 / (u * u);
	const double g2 = 2 / (v * v * v) - 2 / (u * u * u);
	const double eta = g > 0 ? std::exp(-g) / (1 + std::exp(-g)) : 1 / (1 + std::exp(g));
	if (eta < kEtaFloor) return EtaJet{0, 0, 0, true};
	const double ch = std::cosh(0.5 * g);
	const double q = 1 / (4 * ch * ch);  // eta (1 - eta)
	const double d1 = -q * g1;
	const double d2 = -d1 * (1 - 2 * eta) * g1 - q * g2;
	return EtaJet{eta, d1, d2, false};
}

inline double eta(double s) { return eta_jet(s).value; }
inline double eta_star(double s) { return s < 1 ? 0.0 : eta(s); }

struct CutoffParams {
	double r = 1;
	double p = 2;
	Point center;
};

struct CutoffJet {
	double value = 0;
	double star = 0;
	double dt = 0;
	Point grad;
	double laplacian = 0;
	double argument = 0;
	bool clamped = false;
};

// psi_r(x, t) = eta((2|x-z|^2 + 2t)/r) with closed-form derivatives.
inline CutoffJet psi_r(const CutoffParams& c, const Point& x, double t) {
	if (!(c.r > 0)) throw InvalidArgument("cut-off scale r must be positive");
	if (!(t >= 0)) throw InvalidArgument("cut-off time must be nonnegative");
	if (x.dim() != c.center.dim()) throw InvalidArgument("cut-off point and centre differ in dimension");
	const Point y = x - c.center;
	const double y2 = dot(y, y);
	const double s = (2 * y2 + 2 * t) / c.r;
	const EtaJet e = eta_jet(s);
	CutoffJet out;
	out.argument = s;
	out.value = e.value;
	out.star = s < 1 ? 0.0 : e.value;
	out.clamped = e.clamped;
	out.dt = 2 * e.d1 / c.r;
	out.grad = (4 * e.d1 / c.r) * y;
	out.laplacian = 16 * y2 / (c.r * c.r) * e.d2 + 4 * static_cast<double>(x.dim()) * e.d1 / c.r;
	return out;
}

struct CutoffConstants {
	double c_time = 0;       // sup |d_t psi| r / psi*^(1/p)
	double c_gradient = 0;   // sup |grad psi| r / (|x-z| psi*^(1/p))
	double c_laplacian = 0;  // sup |lap psi| r / psi*^(1/p)
	std::size_t samples = 0;
	std::size_t skipped = 0;
	std::size_t star_zero_violations = 0;  // psi* = 0 while a derivative is nonzero
};

// Empirical constants over a grid in the support annulus 1 <= (2|x-z|^2+2t)/r <= 2, plus the inner region.
inline CutoffConstants verify_cutoff_bounds(const CutoffParams& c, std::size_t n_arg = 200, std::size_t n_split = 41) {
	if (n_arg < 2 || n_split < 2) throw InvalidArgument("cut-off grid needs at least two points per axis");
	const std::size_t n = c.center.dim();
	Point dir(n);
	for (std::size_t i = 0; i < n; ++i) dir[i] = 1 / std::sqrt(static_cast<double>(n));
	CutoffConstants out;
	for (std::size_t i = 0; i < n_arg; ++i) {
		const double s = 0.5 + 2.0 * static_cast<double>(i) / static_cast<double>(n_arg - 1);  // covers [0.5, 2.5]
		for (std::size_t j = 0; j < n_split; ++j) {
			const double th = static_cast<double>(j) / static_cast<double>(n_split - 1);
			const double rad = std::sqrt(th * s * c.r / 2), t = (1 - th) * s * c.r / 2;
			const Point x = c.center + rad * dir;
			const CutoffJet jet = psi_r(c, x, t);
			++out.samples;
			const double gn = jet.grad.norm();
			const bool moving = jet.dt != 0 || gn != 0 || jet.laplacian != 0;
			if (jet.star == 0) {
				if (moving) ++out.star_zero_violations;
				else ++out.skipped;
				continue;
			}
			const double w = std::pow(jet.star, 1 / c.p);
			out.c_time = std::max(out.c_time, std::abs(jet.dt) * c.r / w);
			if (rad > 0) out.c_gradient = std::max(out.c_gradient, gn * c.r / (rad * w));
			out.c_laplacian = std::max(out.c_laplacian, std::abs(jet.laplacian) * c.r / w);
		}
	}
	return out;
}

// Right side of the differential-inequality bound:
// c^(a/(a-1)) (1/(a-1))^(1/(a-1)) (int_a^b eta^-alpha)^(-1/(a-1)).
inline double lemma31_rhs(double a, double b, const std::function<double(double)>& eta_fn, double c_star, double alpha) {
	if (!(a > 0) || !(b > a)) throw InvalidArgument("need 0 < a < b");
	if (!(alpha > 1)) throw InvalidArgument("alpha must exceed 1");
	if (!(c_star > 0)) throw InvalidArgument("c_* must be positive");
	const QuadResult q = integrate_line(
	    [&](double r) {
		    const double e = eta_fn(r);
		    if (!(e > 0)) throw InvalidArgument("eta must be positive on [a, b]");
		    return std::pow(e, -alpha);
	    },
	    a, b, QuadOptions::relative(1e-12));
	require_converged(q, "integral of eta^-alpha");
	const double k = 1 / (alpha - 1);
	return std::pow(c_star, alpha * k) * std::pow(k, k) * std::pow(q.value, -k);
}

enum class OdeFate { Finite, BlowUp, Unknown };

// xi' = ((m + xi)/(c eta))^alpha from xi(a) = xi0 with an adaptive Dormand-Prince integrator.
// Integrates w = log(m + xi), which grows only logarithmically towards a blow-up; growth of (m + xi)^(alpha-1)
// by a factor 1e10 counts as blow-up, since the local time scale has then shrunk by the same factor.
inline OdeFate lemma31_ode_fate(double m, double a, double b, const std::function<double(double)>& eta_fn, double c_star,
                                double alpha, double xi0, std::size_t max_steps = 200000) {
	if (m + xi0 <= 0) return OdeFate::Finite;
	using State = std::array<double, 1>;
	namespace ode = boost::numeric::odeint;
	auto rhs = [&](const State& w, State& dw, double r) {
		dw[0] = std::exp((alpha - 1) * w[0]) * std::pow(c_star * eta_fn(r), -alpha);
	};
	auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
	State w{std::log(m + xi0)};
	const double ceiling = w[0] + std::log(1e10) / (alpha - 1);
	double r = a, dt = (b - a) * 1e-3;
	for (std::size_t k = 0; k < max_steps; ++k) {
		if (!(w[0] <= ceiling)) return OdeFate::BlowUp;
		if (r >= b) return OdeFate::Finite;
		dt = std::min(dt, b - r);
		if (dt < 1e-15 * (b - a)) return OdeFate::Unknown;
		const State before = w;
		if (stepper.try_step(rhs, w, r, dt) == ode::fail) w = before;
	}
	return OdeFate::Unknown;
}

struct Lemma31Report {
	double rhs_bound = 0;
	double witness_m = 0;       // largest m observed to stay finite
	double witness_upper = 0;   // smallest m observed to blow up
	bool bracket_only = false;  // stopped on an undecided solve
	std::size_t solves = 0;
};

// Largest m for which the equality ODE stays finite on [a, b], by bisection.
inline Lemma31Report lemma31_bound(double a, double b, const std::function<double(double)>& eta_fn, double c_star,
                                   double alpha, double xi0, double rel_width = 1e-9) {
	if (!(xi0 >= 0)) throw InvalidArgument("xi(a) must be nonnegative");
	Lemma31Report rep;
	rep.rhs_bound = lemma31_rhs(a, b, eta_fn, c_star, alpha);
	auto fate = [&](double m) {
		++rep.solves;
		return lemma31_ode_fate(m, a, b, eta_fn, c_star, alpha, xi0);
	};
	double lo = 0, hi = 1;
	for (int k = 0;; ++k) {
		const OdeFate f = fate(hi);
		if (f == OdeFate::BlowUp) break;
		if (f == OdeFate::Unknown || k > 200) {
			rep.witness_m = lo;
			rep.witness_upper = std::numeric_limits<double>::infinity();
			rep.bracket_only = true;
			return rep;
		}
		lo = hi;
		hi *= 2;
	}
	while (hi - lo > rel_width * hi) {
		const double mid = 0.5 * (lo + hi);
		const OdeFate f = fate(mid);
		if (f == OdeFate::Unknown) {
			rep.bracket_only = true;
			break;
		}
		(f == OdeFate::Finite ? lo : hi) = mid;
	}
	rep.witness_m = lo;
	rep.witness_upper = hi;
	return rep;
}

} // namespace mildheat

#endif // MILDHEAT_ANALYSIS_HPP
