#ifndef MILDHEAT_KERNEL_HPP
#define MILDHEAT_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "point.hpp"
#include "quadrature.hpp"

namespace mildheat {

inline constexpr double kMinTime = 1e-12;

struct KernelOptions {
	double tolerance = 1e-14;
	std::size_t max_terms = 1'000'000;
	double truncation() const { return tolerance * 1e-2; }
};

inline void check_time(double t) {
	if (!(t > 0) || !std::isfinite(t)) throw InvalidArgument("time must be positive and finite");
	if (t < kMinTime) throw InvalidArgument("time below the 1e-12 floor");
}

// Radius beyond which a Gaussian factor exp(-r^2/4t) drops below tau.
inline double gaussian_radius(double t, double tau) { return std::sqrt(4.0 * t * std::log(1.0 / tau)); }

namespace detail {

inline double gauss1(double r, double t) {
	return std::exp(-r * r / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

// g(a - y) - g(a + y), evaluated without cancellation for small a*y/t.
inline double image_pair(double a, double y, double t) {
	const double q = -a * y / t;
	if (q > 50.0) return gauss1(a - y, t) - gauss1(a + y, t);
	return -gauss1(a - y, t) * std::expm1(q);
}

// (g(a - y) - g(a + y)) / y, stable as y -> 0.
inline double image_pair_over_y(double a, double y, double t) {
	const double q = -a * y / t;
	if (q > 50.0) return (gauss1(a - y, t) - gauss1(a + y, t)) / y;
	return -gauss1(a - y, t) * (std::expm1(q) / y);
}

inline std::size_t image_count(double L, double t, double tau, std::size_t budget) {
	const double R = gaussian_radius(t, tau);
	const double K = std::ceil((R + 2.0 * L) / (2.0 * L));
	if (2.0 * K + 1.0 > static_cast<double>(budget))
		throw TruncationFailure("image sum exceeds term budget", std::exp(-std::pow(2.0 * L * (budget / 2.0) - 2.0 * L, 2) / (4.0 * t)));
	return static_cast<std::size_t>(K);
}

} // namespace detail

// Dirichlet kernel of (0, L) as a sum over reflected images.
inline double interval_image_sum(double L, double x, double y, double t, const KernelOptions& o = {}) {
	check_time(t);
	const long K = static_cast<long>(detail::image_count(L, t, o.truncation(), o.max_terms));
	double s = 0;
	for (long k = -K; k <= K; ++k) s += detail::image_pair(x + 2.0 * k * L, y, t);
	return std::max(s, 0.0);
}

// Dirichlet kernel of (0, L) as a sine series.
inline double interval_eigen_sum(double L, double x, double y, double t, const KernelOptions& o = {}) {
	check_time(t);
	const double tau = o.truncation();
	const double nmax = std::ceil(L / std::numbers::pi * std::sqrt(std::log(1.0 / tau) / t));
	if (nmax > static_cast<double>(o.max_terms)) {
		const double k = static_cast<double>(o.max_terms) * std::numbers::pi / L;
		const double bound = 2.0 / L * std::exp(-k * k * t) / (-std::expm1(-2.0 * k * std::numbers::pi / L * t));
		throw TruncationFailure("eigen series exceeds term budget", bound);
	}
	double s = 0;
	const double w = std::numbers::pi / L;
	for (std::size_t n = 1; n <= static_cast<std::size_t>(nmax); ++n) {
		const double k = w * static_cast<double>(n);
		s += std::exp(-k * k * t) * std::sin(k * x) * std::sin(k * y);
	}
	return 2.0 / L * s;
}

inline double heat_kernel(const Domain& d, const Point& x, const Point& y, double t, const KernelOptions& o = {}) {
	check_time(t);
	d.require(x, "x");
	d.require(y, "y");
	const std::size_t n = d.dim();
	const double pref = std::pow(4.0 * std::numbers::pi * t, -0.5 * static_cast<double>(n));
	switch (d.kind()) {
	case DomainKind::WholeSpace: return pref * std::exp(-squared_distance(x, y) / (4.0 * t));
	case DomainKind::HalfSpace: {
		if (x.last() == 0 || y.last() == 0) return 0.0;
		return pref * std::exp(-squared_distance(x, y) / (4.0 * t)) * -std::expm1(-x.last() * y.last() / t);
	}
	case DomainKind::Interval: {
		if (d.on_boundary(x) || d.on_boundary(y)) return 0.0;
		// Canonical argument order keeps the evaluation exactly symmetric.
		const double a = std::min(x[0], y[0]), b = std::max(x[0], y[0]);
		const double L = d.length();
		if (t > 0.1 * L * L) return std::max(interval_eigen_sum(L, a, b, t, o), 0.0);
		return interval_image_sum(L, a, b, t, o);
	}
	}
	return 0.0;
}

namespace detail {

// Sine-series form of G(x, y, t) / y, with the y -> 0 limit built in.
inline double interval_eigen_k(double L, double x, double y, double t, const KernelOptions& o) {
	const double tau = o.truncation();
	const std::size_t nmax = static_cast<std::size_t>(std::ceil(L / std::numbers::pi * std::sqrt(std::log(1.0 / tau) / t)));
	const double w = std::numbers::pi / L;
	double s = 0;
	for (std::size_t n = 1; n <= nmax; ++n) {
		const double k = w * static_cast<double>(n);
		const double sy = y == 0 ? k : std::sin(k * y) / y;
		s += std::exp(-k * k * t) * std::sin(k * x) * sy;
	}
	return std::max(2.0 / L * s, 0.0);
}

inline double interval_k_at_zero(double L, double x, double t, const KernelOptions& o) {
	if (t > 0.1 * L * L) return interval_eigen_k(L, x, 0.0, t, o);
	const long K = static_cast<long>(image_count(L, t, o.truncation(), o.max_terms));
	double s = 0;
	for (long k = -K; k <= K; ++k) {
		const double a = x + 2.0 * k * L;
		s += gauss1(a, t) * a / t;
	}
	return std::max(s, 0.0);
}

// Inner normal derivative of y -> G(x, y, t) at a boundary point b.
inline double k_boundary(const Domain& d, const Point& x, const Point& b, double t, const KernelOptions& o) {
	if (d.on_boundary(x)) return 0.0;
	if (d.kind() == DomainKind::HalfSpace) {
		Point bp = b;
		bp.last() = 0;
		const double n = static_cast<double>(d.dim());
		return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * (x.last() / t) * std::exp(-squared_distance(x, bp) / (4.0 * t));
	}
	const double L = d.length();
	if (b[0] <= 0.5 * L) return interval_k_at_zero(L, x[0], t, o);
	return interval_k_at_zero(L, L - x[0], t, o);
}

} // namespace detail

inline double k_kernel(const Domain& d, const Point& x, const Point& y, double t, const KernelOptions& o = {}) {
	if (!d.has_boundary()) throw UnsupportedDomain("K kernel needs a domain with boundary");
	check_time(t);
	d.require(x, "x");
	d.require(y, "y");
	if (d.on_boundary(x)) return 0.0;
	const double dy = d.distance(y);
	if (dy == 0 || dy < 1e-6 * (dy + std::sqrt(t))) return detail::k_boundary(d, x, d.project_to_boundary(y), t, o);
	if (d.kind() == DomainKind::HalfSpace) {
		const double n = static_cast<double>(d.dim());
		const double xn = x.last(), yn = y.last();
		const double ratio = -std::expm1(-xn * yn / t) / yn;
		return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-squared_distance(x, y) / (4.0 * t)) * ratio;
	}
	const double L = d.length();
	double xx = x[0], yy = y[0];
	if (yy > 0.5 * L) {
		xx = L - xx;
		yy = L - yy;
	}
	if (t > 0.1 * L * L) return detail::interval_eigen_k(L, xx, yy, t, o);
	const long K = static_cast<long>(detail::image_count(L, t, o.truncation(), o.max_terms));
	double s = 0;
	for (long k = -K; k <= K; ++k) s += detail::image_pair_over_y(xx + 2.0 * k * L, yy, t);
	return std::max(s, 0.0);
}

enum class KernelIdentity { G, K };

struct SemigroupReport {
	double lhs = 0;
	double rhs = 0;
	double abs_residual = 0;
	double rel_residual = 0;
	double error_estimate = 0;
	std::size_t evaluations = 0;
};

namespace detail {

// Bounding box of the Gaussian neighbourhoods of the given centres, clipped to the domain.
inline BoxRegion truncated_box(const Domain& d, std::initializer_list<std::pair<Point, double>> centres, double tau) {
	const std::size_t n = d.dim();
	Point lo(n), hi(n);
	for (std::size_t i = 0; i < n; ++i) {
		lo[i] = std::numeric_limits<double>::infinity();
		hi[i] = -std::numeric_limits<double>::infinity();
	}
	for (const auto& [c, t] : centres) {
		const double R = gaussian_radius(t, tau);
		for (std::size_t i = 0; i < n; ++i) {
			lo[i] = std::min(lo[i], c[i] - R);
			hi[i] = std::max(hi[i], c[i] + R);
		}
	}
	lo.last() = std::max(lo.last(), d.last_lo());
	hi.last() = std::min(hi.last(), d.last_hi());
	return BoxRegion{lo, hi};
}

} // namespace detail

inline SemigroupReport verify_semigroup(const Domain& d, const Point& x, const Point& y, double t, double s, double tol,
                                        KernelIdentity which = KernelIdentity::G) {
	check_time(t);
	check_time(s);
	if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
	if (which == KernelIdentity::K && !d.has_boundary()) throw UnsupportedDomain("K kernel needs a domain with boundary");
	SemigroupReport rep;
	auto second = [&](const Point& z) { return which == KernelIdentity::G ? heat_kernel(d, z, y, s) : k_kernel(d, z, y, s); };
	rep.lhs = which == KernelIdentity::G ? heat_kernel(d, x, y, t + s) : k_kernel(d, x, y, t + s);
	// The integrand is dominated by the whole-space product, a Gaussian centred at (s x + t y)/(t + s)
	// with time scale t s/(t + s).
	const double tau = std::min(tol * 1e-2, 1e-6);
	const Point centre = (1.0 / (t + s)) * (s * x + t * y);
	const double h = t * s / (t + s);
	const BoxRegion box = detail::truncated_box(d, {{centre, h}}, tau);
	QuadOptions qo{0.1 * tol * std::abs(rep.lhs) + 1e-300, 0.1 * tol, 20'000'000};
	QuadResult q;
	if (!(box.hi.last() > box.lo.last())) {
		q.evaluations = 1;
	} else if (d.dim() == 1) {
		q = integrate_line([&](double z) { return heat_kernel(d, Point{z}, x, t) * second(Point{z}); }, box.lo[0], box.hi[0], qo,
		                   {centre[0], x[0], y[0]});
	} else {
		q = integrate([&](const Point& z, double) { return heat_kernel(d, x, z, t) * second(z); }, box, qo);
	}
	require_converged(q, "semigroup composition");
	rep.rhs = q.value;
	rep.error_estimate = q.error_estimate;
	rep.evaluations = q.evaluations;
	rep.abs_residual = std::abs(rep.lhs - rep.rhs);
	rep.rel_residual = rep.lhs != 0 ? rep.abs_residual / std::abs(rep.lhs) : rep.abs_residual;
	return rep;
}

struct KernelSample {
	Point x;
	Point y;
	double t = 0;
};

struct KernelBoundsCert {
	double c1_hat = 1;
	double c2_hat = 1;
	std::size_t sample_count = 0;
	std::size_t skipped = 0;
	double max_violation = 0;
};

namespace detail {

struct LogRatios {
	double shape_log;  // log of t^{-N/2} d(x)/(d(x)+sqrt t) d(y)/(d(y)+sqrt t)
	double g_log;
	double r2_over_t;
};

inline std::vector<LogRatios> bound_samples(const Domain& d, std::span<const KernelSample> samples, double horizon,
                                            std::size_t& skipped) {
	if (!d.has_boundary()) throw UnsupportedDomain("two-sided bounds need a domain with boundary");
	std::vector<LogRatios> out;
	skipped = 0;
	for (const auto& s : samples) {
		if (!(s.t > 0)) throw InvalidArgument("bound sample with nonpositive time");
		if (!(s.t < horizon)) throw InvalidArgument("bound sample beyond the horizon");
		const double dx = d.distance(s.x), dy = d.distance(s.y);
		if (dx == 0 || dy == 0) {
			++skipped;
			continue;
		}
		const double g = heat_kernel(d, s.x, s.y, s.t);
		if (!(g > 1e-300)) {
			++skipped;
			continue;
		}
		const double st = std::sqrt(s.t);
		const double shape = -0.5 * static_cast<double>(d.dim()) * std::log(s.t) + std::log(dx / (dx + st)) + std::log(dy / (dy + st));
		out.push_back(LogRatios{shape, std::log(g), squared_distance(s.x, s.y) / s.t});
	}
	return out;
}

inline double log_c1_for(const std::vector<LogRatios>& v, double c2) {
	double m = 0;
	for (const auto& r : v) {
		const double lower = r.shape_log - c2 * r.r2_over_t - r.g_log;
		const double upper = r.g_log - r.shape_log + r.r2_over_t / c2;
		m = std::max({m, lower, upper});
	}
	return m;
}

inline double violation_for(const std::vector<LogRatios>& v, double c2, double c1) {
	double worst = -std::numeric_limits<double>::infinity();
	for (const auto& r : v) {
		const double lower = std::exp(r.shape_log - c2 * r.r2_over_t - r.g_log);
		const double upper = std::exp(r.g_log - r.shape_log + r.r2_over_t / c2);
		worst = std::max(worst, (std::max(lower, upper) - c1) / c1);
	}
	return v.empty() ? 0.0 : worst;
}

} // namespace detail

// Smallest c1 with c1^-1 S e^{-c2 r^2/t} <= G <= c1 S e^{-r^2/(c2 t)} on the samples, at a fixed c2.
inline KernelBoundsCert bound_constant_for(const Domain& d, std::span<const KernelSample> samples, double horizon, double c2) {
	if (!(c2 >= 1)) throw InvalidArgument("c2 must be at least 1");
	std::size_t skipped = 0;
	const auto v = detail::bound_samples(d, samples, horizon, skipped);
	KernelBoundsCert c;
	c.c2_hat = c2;
	c.c1_hat = std::exp(detail::log_c1_for(v, c2));
	c.sample_count = v.size();
	c.skipped = skipped;
	c.max_violation = std::isfinite(c.c1_hat) ? detail::violation_for(v, c2, c.c1_hat) : 0.0;
	return c;
}

// Scans the c2 ladder {1, 2, 4, 8, 16} and keeps the pair with the smallest c1.
inline KernelBoundsCert certify_gaussian_bounds(const Domain& d, std::span<const KernelSample> samples, double horizon) {
	KernelBoundsCert best;
	bool first = true;
	for (double c2 : {1.0, 2.0, 4.0, 8.0, 16.0}) {
		const KernelBoundsCert c = bound_constant_for(d, samples, horizon, c2);
		if (first || c.c1_hat < best.c1_hat) best = c;
		first = false;
	}
	if (!std::isfinite(best.c1_hat)) throw InvalidArgument("two-sided bound constant is not finite on the sample grid");
	return best;
}

inline double survival_mass(const Domain& d, const Point& x, double t, double tol = 1e-12) {
	check_time(t);
	d.require(x, "x");
	const double tau = tol * 1e-2;
	const BoxRegion box = detail::truncated_box(d, {{x, t}}, tau);
	if (!(box.hi.last() > box.lo.last())) return 0.0;
	const QuadOptions qo{0.1 * tol, 0, 20'000'000};
	QuadResult q;
	if (d.dim() == 1)
		q = integrate_line([&](double z) { return heat_kernel(d, x, Point{z}, t); }, box.lo[0], box.hi[0], qo, {x[0]});
	else
		q = integrate([&](const Point& z, double) { return heat_kernel(d, x, z, t); }, box, qo);
	require_converged(q, "survival mass");
	return std::clamp(q.value, 0.0, 1.0);
}

} // namespace mildheat

#endif // MILDHEAT_KERNEL_HPP
