#ifndef MILDHEAT_TRACE_HPP
#define MILDHEAT_TRACE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "analysis.hpp"
#include "kernel.hpp"
#include "measure.hpp"
#include "solver.hpp"

namespace mildheat {

struct TestFunction {
	std::function<double(const Point&)> f;
	Point center;
	double radius = 0;  // f vanishes outside B(center, radius)
	std::string tag = "smooth";

	double operator()(const Point& y) const { return f(y); }

	// exp(1 - 1/(1 - |y-c|^2/R^2)) inside B(c, R).
	static TestFunction bump(const Point& c, double R) {
		if (!(R > 0)) throw InvalidArgument("test function radius must be positive");
		return TestFunction{[c, R](const Point& y) {
			                    const double q = squared_distance(y, c) / (R * R);
			                    return q < 1 ? std::exp(1 - 1 / (1 - q)) : 0.0;
		                    },
		                    c, R, "bump"};
	}

	// Equal to 1 on B(c, R) and 0 outside B(c, 2R), through the cut-off eta.
	static TestFunction plateau(const Point& c, double R) {
		if (!(R > 0)) throw InvalidArgument("test function radius must be positive");
		return TestFunction{[c, R](const Point& y) { return eta(std::sqrt(squared_distance(y, c)) / R); }, c, 2 * R, "plateau"};
	}
};

namespace detail {

inline double line_pairing(const GridFunction& u, std::size_t k, const std::function<double(double)>& w, double lo, double hi) {
	const auto& xs = u.grid().nodes();
	lo = std::max(lo, xs.front());
	hi = std::min(hi, xs.back());
	if (!(hi > lo)) return 0.0;
	std::vector<double> br;
	for (double x : xs)
		if (x > lo && x < hi) br.push_back(x);
	const QuadResult q = integrate_line([&](double y) { return w(y) * u.interpolate(k, y); }, lo, hi, QuadOptions::relative(1e-10, 1e-300), br);
	require_converged(q, "trace pairing");
	return q.value;
}

} // namespace detail

// Integral of psi(y) d(y) u(y, t_k) over the piecewise-linear reconstruction of u.
inline double trace_pairing(const GridFunction& u, const TestFunction& psi, std::size_t k) {
	const SpaceTimeGrid& g = u.grid();
	if (k >= g.n_levels()) throw InvalidArgument("time index out of range");
	if (psi.center.dim() != 1) throw InvalidArgument("test function dimension differs from the grid");
	const Domain& d = g.domain();
	return detail::line_pairing(
	    u, k, [&](double y) { return psi(Point{y}) * d.distance(Point{y}); }, psi.center[0] - psi.radius, psi.center[0] + psi.radius);
}

struct TraceEstimate {
	std::vector<double> times;     // increasing
	std::vector<double> pairings;  // at those times
	double limit = 0;
	double error = 0;
	bool inconclusive = false;
	std::string note;
};

namespace detail {

// Least-squares polynomial in sqrt(t) of the given degree, evaluated at 0.
inline double extrapolate_sqrt(const std::vector<double>& t, const std::vector<double>& v, std::size_t n, int degree,
                               double* rms = nullptr) {
	Eigen::MatrixXd A(n, degree + 1);
	Eigen::VectorXd b(n);
	for (std::size_t i = 0; i < n; ++i) {
		const double s = std::sqrt(t[i]);
		for (int j = 0; j <= degree; ++j) A(i, j) = std::pow(s, j);
		b(i) = v[i];
	}
	const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
	if (rms) *rms = n > std::size_t(degree + 1) ? std::sqrt((A * c - b).squaredNorm() / double(n - degree - 1)) : 0.0;
	return c(0);
}

} // namespace detail

// Limit of sequence values at increasing times as t -> 0: quadratic in sqrt(t) over the four smallest times,
// error from the disagreement with a linear fit over the three smallest plus the fit residual.
inline TraceEstimate extrapolate_trace(std::vector<double> times, std::vector<double> values) {
	if (times.size() != values.size()) throw InvalidArgument("times and values differ in length");
	if (times.size() < 3) throw InvalidArgument("trace extrapolation needs at least three time levels");
	std::vector<std::size_t> order(times.size());
	for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
	std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
	TraceEstimate e;
	for (std::size_t i : order) {
		if (!(times[i] > 0)) throw InvalidArgument("trace times must be positive");
		if (!e.times.empty() && times[i] == e.times.back()) throw InvalidArgument("trace times must be distinct");
		e.times.push_back(times[i]);
		e.pairings.push_back(values[i]);
	}
	const auto& v = e.pairings;
	const std::size_t n = std::min<std::size_t>(4, v.size());
	const auto [lo, hi] = std::minmax_element(v.begin(), v.begin() + static_cast<long>(n));
	if (*lo == *hi) {
		e.limit = *lo;
		return e;
	}
	double rms = 0;
	const double quad = detail::extrapolate_sqrt(e.times, v, n, n >= 4 ? 2 : 1, &rms);
	const double lin = detail::extrapolate_sqrt(e.times, v, 3, 1);
	e.limit = quad;
	e.error = std::abs(quad - lin) + rms;
	bool up = true, down = true;
	for (std::size_t i = 1; i < n; ++i) {
		up = up && v[i] >= v[i - 1];
		down = down && v[i] <= v[i - 1];
	}
	if (!up && !down) {
		e.inconclusive = true;
		e.error = std::max(e.error, *hi - *lo);
		e.note = "pairings not monotone in t";
	}
	return e;
}

inline TraceEstimate recover_trace(const GridFunction& u, const TestFunction& psi, const std::vector<std::size_t>& t_indices) {
	if (t_indices.size() < 3) throw InvalidArgument("trace recovery needs at least three time levels");
	std::vector<double> ts, vs;
	for (std::size_t k : t_indices) {
		if (k >= u.grid().n_levels()) throw InvalidArgument("time index out of range");
		ts.push_back(u.grid().times()[k]);
		vs.push_back(trace_pairing(u, psi, k));
	}
	return extrapolate_trace(std::move(ts), std::move(vs));
}

// Indices of the n smallest time levels.
inline std::vector<std::size_t> earliest_levels(const SpaceTimeGrid& g, std::size_t n = 4) {
	std::vector<std::size_t> out;
	for (std::size_t k = 0; k < std::min(n, g.n_levels()); ++k) out.push_back(k);
	return out;
}

struct PsiDField {
	std::vector<Point> points;
	std::vector<double> psi_d;     // int G(x,y,t) d(y) psi(y) dy
	std::vector<double> psi_star;  // psi_d / d(x), the normal-derivative limit on the boundary
};

// psi_d(x,t) and psi_*(x,t) at the given points, any dimension.
inline PsiDField psi_d_transform(const TestFunction& psi, double t, const Domain& d, const std::vector<Point>& points,
                                 const QuadOptions& o = QuadOptions::relative(1e-9, 1e-14)) {
	check_time(t);
	PsiDField out;
	out.points = points;
	const Sphere support{psi.center, psi.radius};
	for (const Point& x : points) {
		if (x.dim() != d.dim() || psi.center.dim() != d.dim()) throw InvalidArgument("point dimension differs from the domain");
		if (!d.contains(x)) throw InvalidArgument("evaluation point outside the domain");
		const double R = 12 * std::sqrt(t);
		const double gap = std::sqrt(squared_distance(x, psi.center)) - psi.radius;
		if (gap >= R) {
			out.psi_d.push_back(0.0);
			out.psi_star.push_back(0.0);
			continue;
		}
		const BallRegion reg{x, R, support, detail::domain_clip(d)};
		const QuadResult qd = integrate(
		    [&](const Point& y, double) { return heat_kernel(d, x, y, t) * d.distance(y) * psi(y); }, reg, o);
		const QuadResult qs = integrate(
		    [&](const Point& y, double) { return k_kernel(d, y, x, t) * d.distance(y) * psi(y); }, reg, o);
		require_converged(qd, "psi_d transform");
		require_converged(qs, "psi_* transform");
		out.psi_d.push_back(qd.value);
		out.psi_star.push_back(qs.value);
	}
	return out;
}

} // namespace mildheat

#endif // MILDHEAT_TRACE_HPP
