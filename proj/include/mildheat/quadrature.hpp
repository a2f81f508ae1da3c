#ifndef MILDHEAT_QUADRATURE_HPP
#define MILDHEAT_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "point.hpp"

namespace mildheat {

struct QuadResult {
	double value = 0;
	double error_estimate = 0;
	std::size_t evaluations = 0;
	bool converged = true;
};

struct QuadOptions {
	double abs_tol = 1e-10;
	double rel_tol = 0;
	std::size_t max_evaluations = 4'000'000;

	static QuadOptions absolute(double tol) { return QuadOptions{tol, 0, 4'000'000}; }
	static QuadOptions relative(double rel, double abs = 1e-300) { return QuadOptions{abs, rel, 4'000'000}; }
};

// The integrand is assumed to behave like |y - location|^{-exponent} * log(e + 1/|y - location|)^{-log_power}
// times a bounded smooth factor near the location.
struct SingularityHint {
	Point location;
	double exponent = 0;
	double log_power = 0;
	// Relative accuracy of the asymptotic model used for the unresolved tail next to the location.
	double tail_model_error = 1e-10;
};

struct Sphere {
	Point center;
	double radius = 0;
};

// Constraint lo <= y_N <= hi on the last coordinate.
struct Clip {
	double lo = -std::numeric_limits<double>::infinity();
	double hi = std::numeric_limits<double>::infinity();
};

struct BallRegion {
	Point center;
	double radius = 0;
	std::optional<Sphere> within;
	Clip clip;
};

struct BoxRegion {
	Point lo;
	Point hi;
};

// (N-1)-dimensional disc on the hyperplane y_N = 0 with surface measure; a single point (counting measure) when N = 1.
struct BoundaryPatch {
	Point center;
	double radius = 0;
	std::optional<Sphere> within;
};

struct TimeInterval {
	double t0 = 0;
	double t1 = 0;
	bool singular_lo = false;
	bool singular_hi = false;
};

using Region = std::variant<BallRegion, BoxRegion, BoundaryPatch>;

// Integrand receives the point and its exact distance to the hint location (NaN without a hint).
// Near a hinted singularity the distance can be far below the spacing of representable coordinates,
// so singular integrands should use it instead of recomputing |y - location|.
using PointIntegrand = std::function<double(const Point&, double)>;

struct EndpointSingularity {
	double exponent = 0;
	double log_power = 0;
};

namespace detail {

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Estimate {
	double value = 0;
	double error = 0;
};

template <class F>
Estimate call_estimate(F& f, double x) {
	if constexpr (std::is_same_v<std::decay_t<std::invoke_result_t<F&, double>>, Estimate>) {
		return f(x);
	} else {
		return Estimate{f(x), 0.0};
	}
}

// Kronrod-15 value with |K15 - G7| plus propagated inner errors as the estimate.
template <class F>
Estimate gk15(F& f, double a, double b, std::size_t& evals) {
	const double c = 0.5 * (a + b);
	const double h = 0.5 * (b - a);
	double resk = 0, resg = 0, inner = 0;
	const Estimate fc = call_estimate(f, c);
	resk = kWgk[7] * fc.value;
	resg = kWg[3] * fc.value;
	inner = kWgk[7] * fc.error;
	for (int j = 0; j < 7; ++j) {
		const double dx = h * kXgk[j];
		const Estimate f1 = call_estimate(f, c - dx);
		const Estimate f2 = call_estimate(f, c + dx);
		resk += kWgk[j] * (f1.value + f2.value);
		inner += kWgk[j] * (f1.error + f2.error);
		if (j % 2 == 1) resg += kWg[j / 2] * (f1.value + f2.value);
	}
	evals += 15;
	Estimate out{resk * h, std::abs((resk - resg) * h) + inner * std::abs(h)};
	if (!std::isfinite(out.value) || !std::isfinite(out.error)) out.error = std::numeric_limits<double>::infinity();
	return out;
}

struct Cell1 {
	double a, b;
	Estimate est;
};

inline double target_error(const QuadOptions& o, double value) {
	return std::max(o.abs_tol, o.rel_tol * std::abs(value));
}

// Adaptive Gauss-Kronrod over the panels defined by sorted breakpoints.
template <class F>
QuadResult adaptive_gk(F&& f, std::vector<double> pts, const QuadOptions& o, const std::size_t* nested_evals = nullptr) {
	std::sort(pts.begin(), pts.end());
	pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
	QuadResult out;
	if (pts.size() < 2) return out;
	std::vector<Cell1> cells;
	std::size_t evals = 0;
	for (std::size_t i = 0; i + 1 < pts.size(); ++i)
		cells.push_back(Cell1{pts[i], pts[i + 1], gk15(f, pts[i], pts[i + 1], evals)});
	auto cmp = [&](std::size_t l, std::size_t r) { return cells[l].est.error < cells[r].est.error; };
	std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);
	double val = 0, err = 0;
	for (std::size_t i = 0; i < cells.size(); ++i) {
		heap.push(i);
		val += cells[i].est.value;
		err += cells[i].est.error;
	}
	std::size_t since_resum = 0;
	bool ok = true;
	while (err > target_error(o, val)) {
		if (evals + (nested_evals ? *nested_evals : 0) >= o.max_evaluations || heap.empty()) {
			ok = false;
			break;
		}
		const std::size_t i = heap.top();
		heap.pop();
		const double a = cells[i].a, b = cells[i].b;
		const double m = 0.5 * (a + b);
		if (!(m > a && m < b) || (b - a) <= 1e-15 * std::max(std::abs(a), std::abs(b))) continue;
		const Estimate left = gk15(f, a, m, evals);
		const Estimate right = gk15(f, m, b, evals);
		val += left.value + right.value - cells[i].est.value;
		err += left.error + right.error - cells[i].est.error;
		cells[i] = Cell1{a, m, left};
		cells.push_back(Cell1{m, b, right});
		heap.push(i);
		heap.push(cells.size() - 1);
		if (++since_resum == 256 || !std::isfinite(err)) {
			since_resum = 0;
			val = err = 0;
			for (const auto& c : cells) {
				val += c.est.value;
				err += c.est.error;
			}
		}
	}
	std::sort(cells.begin(), cells.end(), [](const Cell1& l, const Cell1& r) { return l.a < r.a; });
	val = err = 0;
	for (const auto& c : cells) {
		val += c.est.value;
		err += c.est.error;
	}
	out.value = val;
	out.error_estimate = err;
	out.evaluations = evals;
	out.converged = ok && err <= target_error(o, val);
	return out;
}

inline constexpr double kRayFloor = 1e-60;

// Integral of g(r) r^jac over (0, length) for g ~ r^-a L(r)^-b near 0, L(r) = log(e + 1/r).
// Uses r = length e^-u, panels doubling in u, and the exact asymptotic tail below r = 1e-60.
template <class G>
QuadResult singular_ray(G&& g, double length, double jac, double a, double b, const QuadOptions& o,
                        const std::vector<double>& r_breaks = {}, double floor = kRayFloor, double tail_err = 1e-10) {
	QuadResult out;
	if (!(length > 0)) return out;
	const double c = jac + 1.0 - a;
	const bool critical = std::abs(c) <= 1e-9;
	if (c < -1e-9 || (critical && b <= 1.0 + 1e-9))
		throw QuadratureFailure("integrand is not integrable at the hinted singularity", std::numeric_limits<double>::infinity(),
		                        std::numeric_limits<double>::infinity(), 0);
	const double U = floor == kRayFloor ? std::max(std::log(length / floor), 30.0) : std::log(length / floor);
	auto h = [&](double u) {
		const double r = length * std::exp(-u);
		return g(r) * std::pow(r, jac + 1.0);
	};
	std::vector<double> pts{0.0, 0.5};
	for (double u = 1.0; u < U; u *= 2) pts.push_back(u);
	pts.push_back(U);
	for (double rb : r_breaks)
		if (rb > 0 && rb < length) {
			const double u = std::log(length / rb);
			if (u < U) pts.push_back(u);
		}
	QuadResult body = adaptive_gk(h, pts, o);
	const double hU = h(U);
	double tail;
	if (critical) {
		const double rU = length * std::exp(-U);
		const double LU = std::log(std::numbers::e + 1.0 / rU);
		tail = hU * LU / (b - 1.0);
	} else {
		tail = hU / c;
	}
	out.value = body.value + tail;
	out.error_estimate = body.error_estimate + tail_err * std::abs(tail) + 4 * std::numeric_limits<double>::epsilon() * std::abs(out.value);
	out.evaluations = body.evaluations + 1;
	out.converged = body.converged && std::isfinite(out.value);
	return out;
}

inline QuadResult combine(const QuadResult& l, const QuadResult& r) {
	return QuadResult{l.value + r.value, l.error_estimate + r.error_estimate, l.evaluations + r.evaluations,
	                  l.converged && r.converged};
}

inline QuadOptions share(const QuadOptions& o, double parts) {
	QuadOptions s = o;
	s.abs_tol = o.abs_tol / parts;
	return s;
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// One-dimensional integral of f(y, r) over [lo, hi], split into rays at a hinted point inside.
template <class F>
QuadResult interval_integral(F&& f, double lo, double hi, const std::optional<SingularityHint>& hint, const QuadOptions& o,
                             std::vector<double> breaks = {}) {
	if (!(hi > lo)) return QuadResult{};
	if (hint) {
		const double s = hint->location[0];
		if (s >= lo && s <= hi) {
			const QuadOptions half = share(o, 2.0);
			std::vector<double> lb, rb;
			for (double y : breaks) {
				if (y < s) lb.push_back(s - y);
				if (y > s) rb.push_back(y - s);
			}
			QuadResult res;
			if (s > lo)
				res = combine(res, singular_ray([&](double r) { return f(s - r, r); }, s - lo, 0.0, hint->exponent,
				                                hint->log_power, half, lb, kRayFloor, hint->tail_model_error));
			if (hi > s)
				res = combine(res, singular_ray([&](double r) { return f(s + r, r); }, hi - s, 0.0, hint->exponent,
				                                hint->log_power, half, rb, kRayFloor, hint->tail_model_error));
			return res;
		}
		breaks.push_back(std::clamp(s, lo, hi));
		const double sl = s;
		std::vector<double> pts{lo, hi};
		for (double y : breaks)
			if (y > lo && y < hi) pts.push_back(y);
		return adaptive_gk([&](double y) { return f(y, std::abs(y - sl)); }, pts, o);
	}
	std::vector<double> pts{lo, hi};
	for (double y : breaks)
		if (y > lo && y < hi) pts.push_back(y);
	return adaptive_gk([&](double y) { return f(y, nan()); }, pts, o);
}

struct ConvexBody {
	std::size_t dim;
	Sphere ball;
	std::optional<Sphere> within;
	Clip clip;
	std::optional<BoxRegion> box = std::nullopt;

	bool contains(const Point& y, double slack = 1e-12) const {
		auto in_ball = [&](const Sphere& s) { return distance(y, s.center) <= s.radius * (1 + slack) + 1e-300; };
		if (!in_ball(ball)) return false;
		if (within && !in_ball(*within)) return false;
		if (box)
			for (std::size_t i = 0; i < dim; ++i)
				if (y[i] < box->lo[i] || y[i] > box->hi[i]) return false;
		const double yn = y.last();
		if (std::isfinite(clip.lo) && yn < clip.lo - slack * std::abs(clip.lo)) return false;
		if (std::isfinite(clip.hi) && yn > clip.hi + slack * std::abs(clip.hi)) return false;
		return true;
	}

	// Distance from o along unit direction w to the boundary of the body; o must lie inside.
	double exit(const Point& o, const Point& w) const {
		auto sphere_exit = [&](const Sphere& s) {
			const Point d = o - s.center;
			const double bb = dot(w, d);
			const double q = dot(d, d) - s.radius * s.radius;
			const double disc = std::max(bb * bb - q, 0.0);
			return std::max(-bb + std::sqrt(disc), 0.0);
		};
		double rho = sphere_exit(ball);
		if (within) rho = std::min(rho, sphere_exit(*within));
		const double wn = w.last();
		if (wn < 0 && std::isfinite(clip.lo)) rho = std::min(rho, std::max(o.last() - clip.lo, 0.0) / -wn);
		if (wn > 0 && std::isfinite(clip.hi)) rho = std::min(rho, std::max(clip.hi - o.last(), 0.0) / wn);
		if (box)
			for (std::size_t i = 0; i < dim; ++i) {
				if (w[i] < 0) rho = std::min(rho, std::max(o[i] - box->lo[i], 0.0) / -w[i]);
				if (w[i] > 0) rho = std::min(rho, std::max(box->hi[i] - o[i], 0.0) / w[i]);
			}
		return rho;
	}

	// Some point of the body, or nothing when it is empty.
	std::optional<Point> interior_point() const {
		std::vector<Point> cand{ball.center};
		if (within) {
			const double D = distance(ball.center, within->center);
			if (D > ball.radius + within->radius) return std::nullopt;
			if (D > 0) {
				const double lo = std::max(-ball.radius, D - within->radius);
				const double hi = std::min(ball.radius, D + within->radius);
				const double m = 0.5 * (lo + hi);
				cand.push_back(ball.center + (m / D) * (within->center - ball.center));
			}
			cand.push_back(within->center);
		}
		if (box) {
			// Step from the point of the box nearest the ball centre towards the box centre.
			Point c(dim), b(dim);
			for (std::size_t i = 0; i < dim; ++i) {
				c[i] = std::clamp(ball.center[i], box->lo[i], box->hi[i]);
				b[i] = 0.5 * (box->lo[i] + box->hi[i]);
			}
			const double room = ball.radius - distance(c, ball.center), len = distance(b, c);
			if (room > 0) cand.insert(cand.begin(), len > 0 ? c + (0.5 * std::min(1.0, room / len)) * (b - c) : c);
		}
		for (Point p : cand) {
			if (contains(p)) return p;
			p.last() = std::clamp(p.last(), clip.lo, clip.hi);
			if (contains(p)) return p;
		}
		return std::nullopt;
	}
};

// Polar integration over a convex body around an origin inside it.
template <class F>
QuadResult polar_integral(F&& f, const ConvexBody& body, const Point& origin, const std::optional<SingularityHint>& hint,
                          bool origin_is_hint, const QuadOptions& o) {
	const std::size_t n = body.dim;
	constexpr double pi = std::numbers::pi;
	std::size_t evals = 0;
	auto ray = [&](const Point& w, const QuadOptions& ro) -> Estimate {
		const double rho = body.exit(origin, w);
		if (!(rho > 0)) return Estimate{};
		auto g = [&](double r) {
			const Point y = origin + r * w;
			const double rh = origin_is_hint ? r : (hint ? distance(y, hint->location) : nan());
			return f(y, rh);
		};
		QuadResult q;
		if (origin_is_hint) {
			q = singular_ray(g, rho, static_cast<double>(n) - 1.0, hint->exponent, hint->log_power, ro, {}, kRayFloor,
			                 hint->tail_model_error);
		} else {
			const double jac = static_cast<double>(n) - 1.0;
			q = adaptive_gk([&](double r) { return g(r) * (jac == 0 ? 1.0 : std::pow(r, jac)); }, {0.0, rho}, ro);
		}
		evals += q.evaluations;
		return Estimate{q.value, q.error_estimate};
	};
	const bool on_lo = std::isfinite(body.clip.lo) && origin.last() <= body.clip.lo;
	const bool on_hi = std::isfinite(body.clip.hi) && origin.last() >= body.clip.hi;
	if (on_lo && on_hi) return QuadResult{};
	QuadResult res;
	if (n == 1) {
		const QuadOptions half = share(o, 2.0);
		for (double s : {-1.0, 1.0}) {
			const Estimate e = ray(Point{s}, half);
			res.value += e.value;
			res.error_estimate += e.error;
		}
		res.evaluations = evals;
		return res;
	}
	if (n == 2) {
		double a = 0, b = 2 * pi;
		if (on_lo) b = pi;
		if (on_hi) a = pi;
		const QuadOptions ro{0.05 * o.abs_tol / (b - a), 0.05 * o.rel_tol, o.max_evaluations};
		auto ang = [&](double th) { return ray(Point{std::cos(th), std::sin(th)}, ro); };
		std::vector<double> pts;
		for (double t = a; t <= b + 1e-12; t += 0.5 * pi) pts.push_back(std::min(t, b));
		res = adaptive_gk(ang, pts, o, &evals);
		res.evaluations = evals;
		return res;
	}
	// n == 3, polar angle measured from e_N.
	double t0 = 0, t1 = pi;
	if (on_lo) t1 = 0.5 * pi;
	if (on_hi) t0 = 0.5 * pi;
	const QuadOptions mid{0.05 * o.abs_tol / (2 * pi), 0.05 * o.rel_tol, o.max_evaluations};
	const QuadOptions ro{0.05 * mid.abs_tol / pi, 0.05 * mid.rel_tol, o.max_evaluations};
	auto outer = [&](double ph) -> Estimate {
		auto inner = [&](double th) -> Estimate {
			const double st = std::sin(th);
			const Estimate e = ray(Point{st * std::cos(ph), st * std::sin(ph), std::cos(th)}, ro);
			return Estimate{e.value * st, e.error * st};
		};
		std::vector<double> pts{t0, t1};
		if (t0 < 0.5 * pi && t1 > 0.5 * pi) pts.push_back(0.5 * pi);
		const QuadResult q = adaptive_gk(inner, pts, mid, &evals);
		return Estimate{q.value, q.error_estimate};
	};
	res = adaptive_gk(outer, {0.0, 0.5 * pi, pi, 1.5 * pi, 2 * pi}, o, &evals);
	res.evaluations = evals;
	return res;
}

template <class F>
QuadResult body_integral(F&& f, const ConvexBody& body, const std::optional<SingularityHint>& hint, const QuadOptions& o) {
	if (!(body.ball.radius > 0)) return QuadResult{};
	if (body.dim == 1) {
		double lo = body.ball.center[0] - body.ball.radius, hi = body.ball.center[0] + body.ball.radius;
		if (body.within) {
			lo = std::max(lo, body.within->center[0] - body.within->radius);
			hi = std::min(hi, body.within->center[0] + body.within->radius);
		}
		lo = std::max(lo, body.clip.lo);
		hi = std::min(hi, body.clip.hi);
		return interval_integral([&](double y, double r) { return f(Point{y}, r); }, lo, hi, hint, o);
	}
	if (hint && body.contains(hint->location, 1e-14)) return polar_integral(f, body, hint->location, hint, true, o);
	const auto origin = body.interior_point();
	if (!origin) return QuadResult{};
	return polar_integral(f, body, *origin, hint, false, o);
}

// Genz-Malik degree 7 rule with embedded degree 5 estimate on boxes of dimension 2 or 3.
struct GenzMalik {
	std::size_t n;
	double l2 = std::sqrt(9.0 / 70.0), l4 = std::sqrt(9.0 / 10.0), l5 = std::sqrt(9.0 / 19.0);
	double w1, w2, w3, w4, w5, e1, e2, e3, e4;

	explicit GenzMalik(std::size_t dim) : n(dim) {
		const double N = static_cast<double>(n);
		w1 = (12824.0 - 9120.0 * N + 400.0 * N * N) / 19683.0;
		w2 = 980.0 / 6561.0;
		w3 = (1820.0 - 400.0 * N) / 19683.0;
		w4 = 200.0 / 19683.0;
		w5 = 6859.0 / 19683.0 / std::pow(2.0, N);
		e1 = (729.0 - 950.0 * N + 50.0 * N * N) / 729.0;
		e2 = 245.0 / 486.0;
		e3 = (265.0 - 100.0 * N) / 1458.0;
		e4 = 25.0 / 729.0;
	}

	template <class F>
	Estimate apply(F& f, const Point& c, const Point& h, std::size_t& evals) const {
		double vol = 1;
		for (std::size_t i = 0; i < n; ++i) vol *= 2 * h[i];
		const double f0 = f(c);
		double s2 = 0, s3 = 0, s4 = 0, s5 = 0;
		for (std::size_t i = 0; i < n; ++i) {
			for (double sg : {-1.0, 1.0}) {
				Point p = c;
				p[i] += sg * l2 * h[i];
				s2 += f(p);
				p = c;
				p[i] += sg * l4 * h[i];
				s3 += f(p);
			}
		}
		for (std::size_t i = 0; i < n; ++i)
			for (std::size_t j = i + 1; j < n; ++j)
				for (double si : {-1.0, 1.0})
					for (double sj : {-1.0, 1.0}) {
						Point p = c;
						p[i] += si * l4 * h[i];
						p[j] += sj * l4 * h[j];
						s4 += f(p);
					}
		const std::size_t corners = std::size_t{1} << n;
		for (std::size_t m = 0; m < corners; ++m) {
			Point p = c;
			for (std::size_t i = 0; i < n; ++i) p[i] += ((m >> i) & 1 ? 1.0 : -1.0) * l5 * h[i];
			s5 += f(p);
		}
		evals += 1 + 4 * n + 2 * n * (n - 1) + corners;
		const double i7 = vol * (w1 * f0 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
		const double i5 = vol * (e1 * f0 + e2 * s2 + e3 * s3 + e4 * s4);
		Estimate out{i7, std::abs(i7 - i5)};
		if (!std::isfinite(out.value)) out.error = std::numeric_limits<double>::infinity();
		return out;
	}
};

template <class F>
QuadResult box_cubature(F&& f, const BoxRegion& box, const std::optional<SingularityHint>& hint, const QuadOptions& o) {
	const std::size_t n = box.lo.dim();
	const GenzMalik rule(n);
	struct Cell {
		Point lo, hi;
		Estimate est;
	};
	std::vector<Cell> cells;
	std::size_t evals = 0;
	auto g = [&](const Point& y) { return f(y, hint ? distance(y, hint->location) : nan()); };
	auto eval_cell = [&](const Point& lo, const Point& hi) {
		Point c(n), h(n);
		for (std::size_t i = 0; i < n; ++i) {
			c[i] = 0.5 * (lo[i] + hi[i]);
			h[i] = 0.5 * (hi[i] - lo[i]);
		}
		return Cell{lo, hi, rule.apply(g, c, h, evals)};
	};
	// Initial cells: split at the hint so it sits on cell corners.
	// Start from a 2^N split so a narrow peak is less likely to hide between rule points.
	std::vector<std::pair<Point, Point>> init{{box.lo, box.hi}};
	for (std::size_t i = 0; i < n; ++i) {
		std::vector<std::pair<Point, Point>> next;
		for (auto& [lo, hi] : init) {
			const double m = 0.5 * (lo[i] + hi[i]);
			Point m1 = hi, m2 = lo;
			m1[i] = m;
			m2[i] = m;
			next.push_back({lo, m1});
			next.push_back({m2, hi});
		}
		init = std::move(next);
	}
	if (hint) {
		for (std::size_t i = 0; i < n; ++i) {
			const double s = hint->location[i];
			std::vector<std::pair<Point, Point>> next;
			for (auto& [lo, hi] : init) {
				if (s > lo[i] && s < hi[i]) {
					Point m1 = hi, m2 = lo;
					m1[i] = s;
					m2[i] = s;
					next.push_back({lo, m1});
					next.push_back({m2, hi});
				} else {
					next.push_back({lo, hi});
				}
			}
			init = std::move(next);
		}
	}
	for (auto& [lo, hi] : init) {
		bool empty = false;
		for (std::size_t i = 0; i < n; ++i) empty |= !(hi[i] > lo[i]);
		if (!empty) cells.push_back(eval_cell(lo, hi));
	}
	auto corner_axis_side = [&](const Cell& c, std::size_t i) -> int {
		if (!hint) return 0;
		for (std::size_t k = 0; k < n; ++k) {
			const double s = hint->location[k];
			if (s < c.lo[k] || s > c.hi[k]) return 0;
		}
		const double s = hint->location[i];
		if (s == c.lo[i]) return -1;
		if (s == c.hi[i]) return 1;
		return 0;
	};
	auto cmp = [&](std::size_t l, std::size_t r) { return cells[l].est.error < cells[r].est.error; };
	std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);
	double val = 0, err = 0;
	for (std::size_t i = 0; i < cells.size(); ++i) {
		heap.push(i);
		val += cells[i].est.value;
		err += cells[i].est.error;
	}
	bool ok = true;
	std::size_t since = 0;
	while (err > target_error(o, val)) {
		if (evals >= o.max_evaluations || heap.empty()) {
			ok = false;
			break;
		}
		const std::size_t idx = heap.top();
		heap.pop();
		const Cell c = cells[idx];
		std::size_t ax = 0;
		for (std::size_t i = 1; i < n; ++i)
			if (c.hi[i] - c.lo[i] > c.hi[ax] - c.lo[ax]) ax = i;
		const double w = c.hi[ax] - c.lo[ax];
		if (w <= 1e-15 * std::max(std::abs(c.lo[ax]), std::abs(c.hi[ax])) || w <= 1e-300) continue;
		const int side = corner_axis_side(c, ax);
		double cut = c.lo[ax] + 0.5 * w;
		if (side < 0) cut = c.lo[ax] + 0.25 * w;
		if (side > 0) cut = c.hi[ax] - 0.25 * w;
		Point h1 = c.hi, l2 = c.lo;
		h1[ax] = cut;
		l2[ax] = cut;
		const Cell a = eval_cell(c.lo, h1);
		const Cell b = eval_cell(l2, c.hi);
		val += a.est.value + b.est.value - c.est.value;
		err += a.est.error + b.est.error - c.est.error;
		cells[idx] = a;
		cells.push_back(b);
		heap.push(idx);
		heap.push(cells.size() - 1);
		if (++since == 256 || !std::isfinite(err)) {
			since = 0;
			val = err = 0;
			for (const auto& x : cells) {
				val += x.est.value;
				err += x.est.error;
			}
		}
	}
	std::sort(cells.begin(), cells.end(), [&](const Cell& l, const Cell& r) {
		for (std::size_t i = 0; i < n; ++i)
			if (l.lo[i] != r.lo[i]) return l.lo[i] < r.lo[i];
		return false;
	});
	val = err = 0;
	for (const auto& x : cells) {
		val += x.est.value;
		err += x.est.error;
	}
	return QuadResult{val, err, evals, ok && err <= target_error(o, val)};
}

} // namespace detail

inline QuadResult integrate(const PointIntegrand& f, const Region& region, const QuadOptions& opts,
                            const std::optional<SingularityHint>& hint = std::nullopt) {
	if (!(opts.abs_tol > 0) && !(opts.rel_tol > 0)) throw InvalidArgument("quadrature tolerance must be positive");
	if (const auto* b = std::get_if<BallRegion>(&region)) {
		if (!(b->radius > 0)) throw InvalidArgument("ball radius must be positive");
		return detail::body_integral(f, detail::ConvexBody{b->center.dim(), Sphere{b->center, b->radius}, b->within, b->clip},
		                             hint, opts);
	}
	if (const auto* x = std::get_if<BoxRegion>(&region)) {
		const std::size_t n = x->lo.dim();
		if (x->hi.dim() != n) throw InvalidArgument("box bounds differ in dimension");
		for (std::size_t i = 0; i < n; ++i)
			if (!(x->hi[i] > x->lo[i])) throw InvalidArgument("box bounds must be ordered");
		if (n == 1) return detail::interval_integral([&](double y, double r) { return f(Point{y}, r); }, x->lo[0], x->hi[0], hint, opts);
		if (hint) {
			// A hinted point inside the box is handled in polar coordinates around it.
			detail::ConvexBody body{n, Sphere{x->lo, std::numeric_limits<double>::infinity()}, std::nullopt, Clip{}, *x};
			if (body.contains(hint->location, 0)) return detail::polar_integral(f, body, hint->location, hint, true, opts);
		}
		return detail::box_cubature(f, *x, hint, opts);
	}
	const auto& patch = std::get<BoundaryPatch>(region);
	const std::size_t n = patch.center.dim();
	if (!(patch.radius > 0)) throw InvalidArgument("patch radius must be positive");
	if (n == 1) {
		QuadResult r;
		r.value = f(patch.center, hint ? std::abs(patch.center[0] - hint->location[0]) : detail::nan());
		r.evaluations = 1;
		return r;
	}
	// Lift an (N-1)-dimensional body back to the hyperplane.
	auto drop = [&](const Point& p) {
		Point q(n - 1);
		for (std::size_t i = 0; i + 1 < n; ++i) q[i] = p[i];
		return q;
	};
	detail::ConvexBody body{n - 1, Sphere{drop(patch.center), patch.radius}, std::nullopt, Clip{}};
	if (patch.within) {
		const double h = patch.within->center.last();
		const double r2 = patch.within->radius * patch.within->radius - h * h;
		if (r2 <= 0) return QuadResult{};
		body.within = Sphere{drop(patch.within->center), std::sqrt(r2)};
	}
	std::optional<SingularityHint> low;
	if (hint) low = SingularityHint{drop(hint->location), hint->exponent, hint->log_power, hint->tail_model_error};
	auto lifted = [&](const Point& q, double r) {
		Point p(n);
		for (std::size_t i = 0; i + 1 < n; ++i) p[i] = q[i];
		p.last() = 0;
		return f(p, r);
	};
	return detail::body_integral(lifted, body, low, opts);
}

inline QuadResult integrate(const PointIntegrand& f, const Region& region, double tol,
                            const std::optional<SingularityHint>& hint = std::nullopt) {
	return integrate(f, region, QuadOptions::absolute(tol), hint);
}

// One-dimensional integral with optional breakpoints, no singular treatment.
inline QuadResult integrate_line(const std::function<double(double)>& g, double a, double b, const QuadOptions& o,
                                 const std::vector<double>& breaks = {}) {
	if (!(b > a)) return QuadResult{};
	std::vector<double> pts{a, b};
	for (double x : breaks)
		if (x > a && x < b) pts.push_back(x);
	return detail::adaptive_gk(g, pts, o);
}

inline QuadResult integrate_time(const std::function<double(double)>& g, const TimeInterval& iv, const QuadOptions& o,
                                 const std::optional<EndpointSingularity>& sing = std::nullopt) {
	if (!(iv.t1 > iv.t0)) throw InvalidArgument("time interval must satisfy t0 < t1");
	const bool lo = iv.singular_lo && sing;
	const bool hi = iv.singular_hi && sing;
	if (!lo && !hi) return detail::adaptive_gk(g, {iv.t0, iv.t1}, o);
	const double mid = (lo && hi) ? 0.5 * (iv.t0 + iv.t1) : (lo ? iv.t1 : iv.t0);
	const QuadOptions part = (lo && hi) ? detail::share(o, 2.0) : o;
	// Offsets below a few ulps of the endpoint are not representable; the exact tail covers them.
	auto floor_at = [](double end, double len, double dir) {
		const double guess = std::max(8 * std::numeric_limits<double>::epsilon() * std::abs(end), 1e-300);
		const double off = std::abs((end + dir * std::min(guess, 0.5 * len)) - end);
		return off > 0 ? off : guess;
	};
	QuadResult res;
	if (lo) {
		const double len = mid - iv.t0;
		res = detail::combine(res, detail::singular_ray([&](double r) { return g(iv.t0 + r); }, len, 0.0, sing->exponent,
		                                                sing->log_power, part, {}, floor_at(iv.t0, len, 1.0)));
	}
	if (hi) {
		const double len = iv.t1 - mid;
		res = detail::combine(res, detail::singular_ray([&](double r) { return g(iv.t1 - r); }, len, 0.0, sing->exponent,
		                                                sing->log_power, part, {}, floor_at(iv.t1, len, -1.0)));
	}
	return res;
}

inline QuadResult integrate_time(const std::function<double(double)>& g, const TimeInterval& iv, double tol,
                                 const std::optional<EndpointSingularity>& sing = std::nullopt) {
	return integrate_time(g, iv, QuadOptions::absolute(tol), sing);
}

// Throws when an adaptive integral did not reach its tolerance.
inline const QuadResult& require_converged(const QuadResult& r, const char* what) {
	if (!r.converged) throw QuadratureFailure(std::string(what) + ": quadrature budget exhausted", r.value, r.error_estimate, r.evaluations);
	return r;
}

// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
	std::vector<double> x(n), w(n);
	for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
		double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
		double dp = 0;
		for (int it = 0; it < 100; ++it) {
			double p0 = 1, p1 = z;
			for (std::size_t k = 2; k <= n; ++k) {
				const double pk = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
				p0 = p1;
				p1 = pk;
			}
			dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1);
			const double dz = p1 / dp;
			z -= dz;
			if (std::abs(dz) < 1e-16) break;
		}
		x[i] = -z;
		x[n - 1 - i] = z;
		w[i] = w[n - 1 - i] = 2.0 / ((1 - z * z) * dp * dp);
	}
	return {x, w};
}

} // namespace mildheat

#endif // MILDHEAT_QUADRATURE_HPP
