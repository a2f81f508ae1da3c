#ifndef MILDHEAT_CRITERIA_HPP
#define MILDHEAT_CRITERIA_HPP

#include <algorithm>
#include <functional>
#include <limits>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "measure.hpp"
#include "quadrature.hpp"
#include "trace.hpp"

namespace mildheat {

enum class Verdict { Consistent, Violated, Inconclusive };

inline std::string to_string(Verdict v) {
	switch (v) {
	case Verdict::Consistent: return "consistent";
	case Verdict::Violated: return "violated";
	case Verdict::Inconclusive: return "inconclusive";
	}
	return "?";
}

struct ExponentFit {
	double slope = 0;
	double band = 0;  // two standard errors of the slope
	double intercept = 0;
	std::size_t samples = 0;
};

struct SampleRow {
	Point z;
	double sigma = 0;  // ball radius, strip width or s
	double lhs = 0;
	double bound = 0;  // NaN when the criterion has no bound column
	double ratio = 0;
};

struct CriterionReport {
	std::string id;
	std::map<std::string, double> params;
	std::vector<SampleRow> samples;
	std::optional<ExponentFit> fit;
	std::optional<double> predicted;
	std::string fit_kind;  // "power" (against sigma) or "log-power" (against log(e + sqrt(T)/sigma))
	Verdict verdict = Verdict::Inconclusive;
	std::string note;
};

namespace detail {

inline ExponentFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
	const std::size_t n = x.size();
	double mx = 0, my = 0;
	for (std::size_t i = 0; i < n; ++i) {
		mx += std::log(x[i]);
		my += std::log(y[i]);
	}
	mx /= double(n);
	my /= double(n);
	double sxx = 0, sxy = 0;
	for (std::size_t i = 0; i < n; ++i) {
		const double dx = std::log(x[i]) - mx;
		sxx += dx * dx;
		sxy += dx * (std::log(y[i]) - my);
	}
	ExponentFit f;
	f.samples = n;
	f.slope = sxy / sxx;
	f.intercept = my - f.slope * mx;
	double rss = 0;
	for (std::size_t i = 0; i < n; ++i) {
		const double r = std::log(y[i]) - f.intercept - f.slope * std::log(x[i]);
		rss += r * r;
	}
	f.band = n > 2 ? 2 * std::sqrt(rss / double(n - 2) / sxx) : 0.0;
	return f;
}

inline void require_fit_samples(const std::vector<double>& sigma, const std::vector<double>& value) {
	if (sigma.size() != value.size()) throw InvalidArgument("fit needs one value per sigma");
	if (sigma.size() < 5) throw InvalidArgument("fit needs at least five samples");
	for (std::size_t i = 0; i < sigma.size(); ++i)
		if (!(sigma[i] > 0) || !(value[i] > 0) || !std::isfinite(value[i])) throw InvalidArgument("fit needs positive finite samples");
	const auto [lo, hi] = std::minmax_element(sigma.begin(), sigma.end());
	if (std::log10(*hi / *lo) < 1.5 - 1e-12) throw InvalidArgument("fit needs sigma to span at least 1.5 decades");
}

} // namespace detail

// Least-squares slope of log(value) against log(sigma).
inline ExponentFit fit_exponent(const std::vector<double>& sigma, const std::vector<double>& value) {
	detail::require_fit_samples(sigma, value);
	return detail::loglog_fit(sigma, value);
}

// log(e + scale/sigma).
inline double log_scale(double scale, double sigma) { return std::log(std::numbers::e + scale / sigma); }

// Least-squares slope of log(value) against log(log(e + scale/sigma)).
inline ExponentFit fit_log_power(const std::vector<double>& sigma, const std::vector<double>& value, double scale) {
	detail::require_fit_samples(sigma, value);
	std::vector<double> L;
	for (double s : sigma) L.push_back(log_scale(scale, s));
	return detail::loglog_fit(L, value);
}

// n points geometric in [lo, hi].
inline std::vector<double> geometric_sweep(double lo, double hi, std::size_t n) {
	if (!(lo > 0) || !(hi > lo) || n < 2) throw InvalidArgument("sweep needs 0 < lo < hi and two points");
	std::vector<double> out;
	for (std::size_t i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / double(n - 1)));
	return out;
}

inline std::vector<double> default_sigmas(double T) { return geometric_sweep(1e-3, 0.5 * std::sqrt(T), 12); }
// Log-power fits converge like log(L)/L; anchors at the origin allow much deeper ranges than the default.
inline std::vector<double> orlicz_sigmas(double lo = 1e-6, double hi = 1e-2) { return geometric_sweep(lo, hi, 12); }

// Sample centres: singular anchors and atoms, their boundary projections, and points above each projection
// at distances geometric in sqrt(T).
inline std::vector<Point> sample_lattice(const MeasureSpec& mu, const Domain& d, double T) {
	std::vector<Point> base;
	for (const auto* part : {&mu.interior(), &mu.boundary()})
		if (*part) {
			if ((*part)->singular)
				base.push_back((*part)->singular->anchor);
			else if ((*part)->support)
				base.push_back((*part)->support->center);
		}
	for (const auto& a : mu.atoms()) base.push_back(a.at);
	if (base.empty()) {
		Point o(d.dim());
		if (d.has_boundary()) o.last() = d.kind() == DomainKind::Interval ? 0.5 * d.length() : 1.0;
		base.push_back(o);
	}
	std::vector<Point> out;
	auto add = [&](const Point& z) {
		if (!d.contains(z)) return;
		for (const Point& q : out)
			if (squared_distance(q, z) == 0) return;
		out.push_back(z);
	};
	for (const Point& z : base) {
		add(z);
		if (!d.has_boundary()) continue;
		const Point b = d.project_to_boundary(z);
		add(b);
		const Point n = d.inner_normal(b);
		for (double f : {1e-2, 1e-1, 0.5, 1.0}) add(b + (f * std::sqrt(T)) * n);
	}
	return out;
}

namespace detail {

// Geometric s-ladder on [sigma, sqrt(T)] (the infimum over the open end is its closure value) with the stationary point of (dz + s) s^a added when inside.
inline std::pair<double, double> ladder_inf(double dz, double a, double sigma, double T, std::size_t n = 64) {
	const double top = std::sqrt(T);
	auto f = [&](double s) { return (dz + s) * std::pow(s, a); };
	double best = f(sigma), at = sigma;
	for (std::size_t i = 1; i <= n; ++i) {
		const double s = sigma * std::pow(top / sigma, double(i) / double(n));
		if (f(s) < best) best = f(s), at = s;
	}
	if (a < 0 && a > -1) {
		const double s = -a * dz / (a + 1);
		if (s > sigma && s < top && f(s) < best) best = f(s), at = s;
	}
	return {best, at};
}

// Samples within two decades of the smallest sigma; power-law claims are about sigma -> 0 and the
// large-sigma end is pre-asymptotic when z sits near the boundary.
inline void small_sigma_window(std::vector<double>& s, std::vector<double>& v) {
	if (s.empty()) return;
	const double cut = *std::min_element(s.begin(), s.end()) * 1e2 * (1 + 1e-12);
	std::vector<double> ks, kv;
	for (std::size_t i = 0; i < s.size(); ++i)
		if (s[i] <= cut) ks.push_back(s[i]), kv.push_back(v[i]);
	s = std::move(ks);
	v = std::move(kv);
}

// Trend of the ratio as sigma decreases: power kind fits against sigma, log kind against the log scale.
inline Verdict growth_verdict(const std::vector<double>& sigma, const std::vector<double>& ratio, bool log_kind, double scale,
                              std::optional<ExponentFit>& fit, std::string& note) {
	bool any = false;
	for (double r : ratio) {
		if (!std::isfinite(r)) {
			note = "ratio not finite";
			return Verdict::Violated;
		}
		any = any || r > 0;
	}
	if (!any) return Verdict::Consistent;
	std::vector<double> s, r;
	for (std::size_t i = 0; i < sigma.size(); ++i)
		if (ratio[i] > 0) s.push_back(sigma[i]), r.push_back(ratio[i]);
	if (!log_kind) small_sigma_window(s, r);
	try {
		fit = log_kind ? fit_log_power(s, r, scale) : fit_exponent(s, r);
	} catch (const InvalidArgument& e) {
		note = e.what();
		return Verdict::Inconclusive;
	}
	// Growth as sigma -> 0 is a negative power slope or a positive log-power slope.
	const bool grows = log_kind ? fit->slope > 0.25 : fit->slope < -0.05;
	if (grows) note = "ratio grows as sigma decreases";
	return grows ? Verdict::Violated : Verdict::Consistent;
}

inline Verdict worst(Verdict a, Verdict b) {
	if (a == Verdict::Violated || b == Verdict::Violated) return Verdict::Violated;
	if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
	return Verdict::Consistent;
}

inline void require_samples(const std::vector<Point>& zs, const std::vector<double>& sigmas) {
	if (zs.empty() || sigmas.empty()) throw InvalidArgument("criterion needs nonempty z and sigma samples");
	for (double s : sigmas)
		if (!(s > 0)) throw InvalidArgument("sigma samples must be positive");
}

// Per-z growth verdicts combined; the reported fit is the one at the z with the largest ratio.
inline void conclude_by_z(CriterionReport& rep, bool log_kind, const std::function<double(const Point&)>& scale_of) {
	std::vector<Point> zs;
	for (const auto& row : rep.samples) {
		bool seen = false;
		for (const Point& z : zs) seen = seen || squared_distance(z, row.z) == 0;
		if (!seen) zs.push_back(row.z);
	}
	Verdict v = Verdict::Consistent;
	double top = -1;
	for (const Point& z : zs) {
		std::vector<double> s, r;
		double zmax = 0;
		for (const auto& row : rep.samples)
			if (squared_distance(row.z, z) == 0) {
				s.push_back(row.sigma);
				r.push_back(row.ratio);
				zmax = std::max(zmax, row.ratio);
			}
		std::optional<ExponentFit> fit;
		std::string note;
		const Verdict vz = growth_verdict(s, r, log_kind, scale_of(z), fit, note);
		if (vz == Verdict::Violated && rep.note.empty()) rep.note = note;
		v = worst(v, vz);
		if (fit && zmax > top) {
			top = zmax;
			rep.fit = fit;
		}
	}
	rep.fit_kind = log_kind ? "log-power" : "power";
	rep.verdict = v;
}

} // namespace detail

// nu(B(z, sigma)) against inf over s in [sigma, sqrt(T)) of (d(z) + s) s^(N - 2/(p-1)).
inline CriterionReport thm12_ball_bound(const MeasureSpec& mu, const Domain& d, double p, double T, const std::vector<Point>& zs,
                                        const std::vector<double>& sigmas, const QuadOptions& o = measure_tolerance()) {
	detail::require_samples(zs, sigmas);
	if (!(p > 1) || !(T > 0)) throw InvalidArgument("need p > 1 and T > 0");
	const double n = double(d.dim());
	if (std::abs(p - critical_exponent(n)) < 1e-12) throw InvalidArgument("pure power bound excludes p = p_N");
	const double a = n - 2 / (p - 1);
	CriterionReport rep;
	rep.id = "thm12_ball_bound";
	rep.params = {{"p", p}, {"T", T}, {"N", n}};
	rep.predicted = a;
	for (const Point& z : zs)
		for (double s : sigmas) {
			if (!(s < std::sqrt(T))) throw InvalidArgument("sigma must lie below sqrt(T)");
			const double lhs = ball_mass(mu, d, z, s, o);
			const double bound = detail::ladder_inf(d.distance(z), a, s, T).first;
			rep.samples.push_back({z, s, lhs, bound, lhs / bound});
		}
	detail::conclude_by_z(rep, false, [](const Point&) { return 1.0; });
	return rep;
}

enum class LogVariant { PNInterior, PN1Boundary };

// nu(B(z, sigma)) against (d(z) + sigma) L^(-N/2), L = log(e + min(d(z), sqrt T)/sigma), or L^(-(N+1)/2) with L = log(e + sqrt(T)/sigma).
inline CriterionReport thm12_log_bounds(const MeasureSpec& mu, const Domain& d, double T, LogVariant variant, const std::vector<Point>& zs,
                                        const std::vector<double>& sigmas, const QuadOptions& o = measure_tolerance()) {
	detail::require_samples(zs, sigmas);
	if (!(T > 0)) throw InvalidArgument("T must be positive");
	const double n = double(d.dim());
	CriterionReport rep;
	rep.id = variant == LogVariant::PNInterior ? "thm12_log_pN" : "thm12_log_pN1";
	rep.params = {{"T", T}, {"N", n}};
	auto scale_of = [&](const Point& z) { return variant == LogVariant::PNInterior ? std::min(d.distance(z), std::sqrt(T)) : std::sqrt(T); };
	for (const Point& z : zs) {
		if (variant == LogVariant::PN1Boundary && !d.on_boundary(z)) throw InvalidArgument("boundary log bound needs z on the boundary");
		for (double s : sigmas) {
			const double lhs = ball_mass(mu, d, z, s, o);
			const double bound = variant == LogVariant::PNInterior ? (d.distance(z) + s) * std::pow(log_scale(scale_of(z), s), -n / 2)
			                                                       : std::pow(log_scale(std::sqrt(T), s), -(n + 1) / 2);
			rep.samples.push_back({z, s, lhs, bound, lhs / bound});
		}
	}
	detail::conclude_by_z(rep, true, scale_of);
	rep.predicted = 0.0;
	return rep;
}

// Boundary part of mu inside B(centre, window): surface density plus atoms on the boundary.
inline CriterionReport boundary_mass_check(const MeasureSpec& mu, const Domain& d, double p, double window = 1e3,
                                           const QuadOptions& o = measure_tolerance()) {
	if (!(p >= 2)) throw InvalidArgument("boundary mass check needs p >= 2");
	if (!d.has_boundary()) throw InvalidArgument("boundary mass check needs a boundary");
	CriterionReport rep;
	rep.id = "boundary_mass";
	rep.params = {{"p", p}, {"window", window}};
	Point c(d.dim());
	if (const auto& bd = mu.boundary(); bd && bd->support) c = d.project_to_boundary(bd->support->center);
	MeasureSpec only;
	if (mu.boundary()) only.set_boundary(*mu.boundary());
	double mass = mu.boundary() ? integrate_measure(only.scaled(mu.scale()), d, c, window, [](const Point&) { return 1.0; }, o).value : 0.0;
	for (const auto& a : mu.atoms())
		if (d.on_boundary(a.at) && distance(a.at, c) <= window) mass += mu.scale() * a.mass;
	rep.samples.push_back({c, window, mass, std::nan(""), mass});
	rep.verdict = mass > 0 ? Verdict::Violated : Verdict::Consistent;
	if (mass > 0) rep.note = "positive boundary mass with p >= 2";
	return rep;
}

// Centres along the inward normal through the boundary projection of each base point, distances 0, 1/2, 1, 2, 4, ...
inline std::vector<Point> normal_ladder(const Domain& d, const Point& base, double max_distance) {
	std::vector<Point> out;
	const Point b = d.project_to_boundary(base);
	const Point n = d.inner_normal(b);
	out.push_back(b);
	for (double r = 0.5; r <= max_distance * (1 + 1e-12); r *= 2) {
		const Point z = b + r * n;
		if (d.contains(z)) out.push_back(z);
	}
	return out;
}

// sup over z of mu(B(z, 1)) / (1 + d(z)), tracked as the z window widens along zs (ordered by window).
inline CriterionReport cond_1_16(const MeasureSpec& mu, const Domain& d, const std::vector<Point>& zs,
                                 const QuadOptions& o = measure_tolerance()) {
	if (zs.empty()) throw InvalidArgument("criterion needs nonempty z samples");
	CriterionReport rep;
	rep.id = "cond_1_16";
	double sup = 0;
	std::vector<double> window, sups;
	for (const Point& z : zs) {
		const double lhs = ball_mass(mu, d, z, 1.0, o);
		const double ratio = lhs / (1 + d.distance(z));
		sup = std::max(sup, ratio);
		rep.samples.push_back({z, 1.0, lhs, 1 + d.distance(z), ratio});
		if (d.distance(z) > 0) {
			window.push_back(d.distance(z));
			sups.push_back(sup);
		}
	}
	rep.params = {{"sup", sup}};
	if (!std::isfinite(sup)) {
		rep.verdict = Verdict::Violated;
		rep.note = "ratio not finite";
		return rep;
	}
	if (sup == 0) {
		rep.verdict = Verdict::Consistent;
		return rep;
	}
	// Only the outer 1.5 decades of windows decide stability; near the boundary the ratio still climbs to its limit.
	std::size_t first = 0;
	for (std::size_t i = 0; i < window.size(); ++i)
		if (window[i] <= window.back() * std::pow(10.0, -1.5)) first = i;
	const std::vector<double> w_out(window.begin() + static_cast<long>(first), window.end()),
	    s_out(sups.begin() + static_cast<long>(first), sups.end());
	try {
		rep.fit = fit_exponent(w_out, s_out);
		rep.fit_kind = "power";
		rep.predicted = 0.0;
		rep.verdict = rep.fit->slope > 0.05 ? Verdict::Violated : Verdict::Consistent;
		if (rep.verdict == Verdict::Violated) rep.note = "sup grows with the z window";
	} catch (const InvalidArgument& e) {
		rep.verdict = Verdict::Inconclusive;
		rep.note = e.what();
	}
	return rep;
}

// int_0^T s^(-N(p-1)/2) (sup_z int_{B(z,sqrt s)} dmu/(d + sqrt s))^(p-1) ds on a geometric s grid.
// Near s = 0 the integrand times s is fitted to a power s^c; c <= 0 means the integral diverges.
inline CriterionReport sufficient_5_7(const MeasureSpec& mu, const Domain& d, double p, double T, const std::vector<Point>& zs,
                                      std::size_t n_s = 40, double s_min_ratio = 1e-8, const QuadOptions& o = measure_tolerance()) {
	if (!(p > 1) || !(T > 0)) throw InvalidArgument("need p > 1 and T > 0");
	if (zs.empty()) throw InvalidArgument("criterion needs nonempty z samples");
	const double n = double(d.dim());
	CriterionReport rep;
	rep.id = "sufficient_5_7";
	rep.params = {{"p", p}, {"T", T}, {"N", n}};
	const std::vector<double> ss = geometric_sweep(s_min_ratio * T, T, n_s);
	std::vector<double> g;  // integrand times s
	for (double s : ss) {
		double sup = 0;
		Point arg = zs.front();
		for (const Point& z : zs) {
			const double w = weighted_ball_integral(mu, d, z, s, o);
			if (w > sup) sup = w, arg = z;
		}
		const double val = std::pow(s, -n * (p - 1) / 2) * std::pow(sup, p - 1);
		g.push_back(val * s);
		rep.samples.push_back({arg, s, sup, std::nan(""), val});
	}
	double total = 0;
	for (std::size_t i = 1; i < ss.size(); ++i) total += 0.5 * (g[i] + g[i - 1]) * std::log(ss[i] / ss[i - 1]);
	if (g.front() == 0 && total == 0) {
		rep.params["integral"] = 0;
		rep.verdict = Verdict::Consistent;
		return rep;
	}
	std::vector<double> s5(ss.begin(), ss.begin() + 8), g5(g.begin(), g.begin() + 8);
	rep.fit = detail::loglog_fit(s5, g5);
	rep.fit_kind = "power";
	const double c = rep.fit->slope;
	if (c > 0.05) {
		total += g.front() / c;
		rep.params["integral"] = total;
		rep.verdict = Verdict::Consistent;
	} else {
		rep.params["integral"] = std::numeric_limits<double>::infinity();
		rep.verdict = Verdict::Inconclusive;
		rep.note = "integral diverges at s = 0; the sufficient condition fails";
	}
	rep.params["tail_exponent"] = c;
	return rep;
}

namespace detail {

// Integral over B_Omega(z, sigma) of w(y) g(rho(y)) for the interior density rho of mu (scaled), any dimension.
inline double interior_functional(const MeasureSpec& mu, const Domain& d, const Point& z, double sigma,
                                  const std::function<double(const Point&, double)>& g, double hint_exponent, double hint_log,
                                  const QuadOptions& o) {
	const auto& in = mu.interior();
	if (!in) return 0.0;
	std::optional<SingularityHint> hint;
	if (in->singular) hint = SingularityHint{in->singular->anchor, hint_exponent, hint_log};
	auto f = [&](const Point& y, double r) {
		const double rho = mu.interior_density(y, r);
		return rho == 0 ? 0.0 : g(y, rho);
	};
	QuadResult q;
	if (d.dim() == 1) {
		const double lo = std::max(z[0] - sigma, d.last_lo()), hi = std::min(z[0] + sigma, d.last_hi());
		double a = lo, b = hi;
		if (in->support) {
			a = std::max(a, in->support->center[0] - in->support->radius);
			b = std::min(b, in->support->center[0] + in->support->radius);
		}
		if (!(b > a)) return 0.0;
		q = interval_integral([&](double y, double r) { return f(Point{y}, r); }, a, b, hint, o, in->breakpoints);
	} else {
		q = integrate(f, BallRegion{z, sigma, in->support, domain_clip(d)}, o, hint);
	}
	require_converged(q, "density functional");
	return q.value;
}

inline double boundary_functional(const MeasureSpec& mu, const Domain& d, const Point& z, double sigma, const std::function<double(double)>& g,
                                  double hint_exponent, double hint_log, const QuadOptions& o) {
	const auto& bd = mu.boundary();
	if (!bd) return 0.0;
	auto f = [&](const Point& y, double r) {
		const double h = mu.boundary_density(y, r);
		return h == 0 ? 0.0 : g(h);
	};
	if (d.dim() == 1) return f(z, std::nan(""));
	std::optional<SingularityHint> hint;
	if (bd->singular) hint = SingularityHint{bd->singular->anchor, hint_exponent, hint_log};
	const QuadResult q = integrate(f, BoundaryPatch{z, sigma, bd->support}, o, hint);
	require_converged(q, "surface functional");
	return q.value;
}

inline double profile_exponent(const std::optional<DensityPart>& part) { return part && part->singular ? part->singular->profile.exponent : 0.0; }
inline double profile_log(const std::optional<DensityPart>& part) { return part && part->singular ? part->singular->profile.log_power : 0.0; }

} // namespace detail

// sup_z int_{B(z,sigma)} d/(d+sigma) f^alpha dy and sup_{z on the boundary} int h^alpha dS, with sigma-exponent fits
// against N - 2 alpha/(p-1) and N - 1 - 2 alpha (2-p)/(p-1). Interior density f is taken against d(y) dy.
struct MomentReports {
	CriterionReport interior;
	CriterionReport boundary;
};

inline MomentReports prop52_moments(const MeasureSpec& mu, const Domain& d, double alpha, double p, double T, const std::vector<Point>& zs,
                                    const std::vector<double>& sigmas, const QuadOptions& o = measure_tolerance()) {
	detail::require_samples(zs, sigmas);
	if (!(alpha > 1)) throw InvalidArgument("alpha must exceed 1");
	if (!(p > 1) || !(T > 0)) throw InvalidArgument("need p > 1 and T > 0");
	if (p >= 2 && mu.boundary()) throw InvalidArgument("boundary density must vanish when p >= 2");
	if (mu.interior() && mu.interior()->mode != WeightMode::DistanceWeighted)
		throw InvalidArgument("interior density must be given against d(y) dy");
	const double n = double(d.dim());
	MomentReports out;
	out.interior.id = "prop52_interior";
	out.boundary.id = "prop52_boundary";
	for (auto* r : {&out.interior, &out.boundary}) r->params = {{"alpha", alpha}, {"p", p}, {"T", T}, {"N", n}};
	out.interior.predicted = n - 2 * alpha / (p - 1);
	out.boundary.predicted = n - 1 - 2 * alpha * (2 - p) / (p - 1);
	const bool edge = mu.interior() && mu.interior()->singular && mu.interior()->singular->anchor_on_boundary;
	// d/(d + sigma) vanishes linearly at a boundary anchor.
	const double ai = alpha * detail::profile_exponent(mu.interior()) - (edge ? 1 : 0), li = alpha * detail::profile_log(mu.interior());
	const double ab = alpha * detail::profile_exponent(mu.boundary()), lb = alpha * detail::profile_log(mu.boundary());
	std::vector<double> sup_i, sup_b;
	for (double s : sigmas) {
		double best_i = 0, best_b = 0;
		Point zi = zs.front(), zb = zs.front();
		for (const Point& z : zs) {
			const double v = detail::interior_functional(
			    mu, d, z, s, [&](const Point& y, double f) { const double dy = d.distance(y); return dy / (dy + s) * std::pow(f, alpha); }, ai,
			    li, o);
			if (v > best_i) best_i = v, zi = z;
			if (d.on_boundary(z)) {
				const double w = detail::boundary_functional(mu, d, z, s, [&](double h) { return std::pow(h, alpha); }, ab, lb, o);
				if (w > best_b) best_b = w, zb = z;
			}
		}
		out.interior.samples.push_back({zi, s, best_i, std::nan(""), best_i});
		out.boundary.samples.push_back({zb, s, best_b, std::nan(""), best_b});
		sup_i.push_back(best_i);
		sup_b.push_back(best_b);
	}
	for (auto [rep, sup] : {std::pair{&out.interior, &sup_i}, std::pair{&out.boundary, &sup_b}}) {
		rep->fit_kind = "power";
		if (std::all_of(sup->begin(), sup->end(), [](double v) { return v == 0; })) {
			rep->verdict = Verdict::Consistent;
			continue;
		}
		std::vector<double> ws = sigmas, wv = *sup;
		detail::small_sigma_window(ws, wv);
		try {
			rep->fit = fit_exponent(ws, wv);
			// The condition holds for small sigma when the sup decays at least as fast as predicted.
			rep->verdict = rep->fit->slope >= *rep->predicted - 0.05 ? Verdict::Consistent : Verdict::Violated;
		} catch (const InvalidArgument& e) {
			rep->verdict = Verdict::Inconclusive;
			rep->note = e.what();
		}
	}
	return out;
}

// Psi(r) = r log(e + r)^beta.
inline double orlicz_psi(double r, double beta) { return r * std::pow(std::log(std::numbers::e + r), beta); }

namespace detail {

inline void conclude_log_power(CriterionReport& rep, const std::vector<double>& sigmas, const std::vector<double>& sups, double scale) {
	rep.fit_kind = "log-power";
	if (std::all_of(sups.begin(), sups.end(), [](double v) { return v == 0; })) {
		rep.verdict = Verdict::Consistent;
		return;
	}
	try {
		rep.fit = fit_log_power(sigmas, sups, scale);
		rep.verdict = rep.fit->slope <= *rep.predicted + 0.1 ? Verdict::Consistent : Verdict::Violated;
	} catch (const InvalidArgument& e) {
		rep.verdict = Verdict::Inconclusive;
		rep.note = e.what();
	}
}

} // namespace detail

// sup_z int_{B(z,sigma)} d^ell Psi(T^(1/(p-1)) f) dy with the log-power fit against beta - (N+ell)/2.
inline CriterionReport prop53_orlicz(const MeasureSpec& mu, const Domain& d, double beta, double p, int ell, double T,
                                     const std::vector<Point>& zs, const std::vector<double>& sigmas,
                                     const QuadOptions& o = measure_tolerance()) {
	detail::require_samples(zs, sigmas);
	if (ell != 0 && ell != 1) throw InvalidArgument("ell must be 0 or 1");
	if (!(beta > 0) || !(T > 0)) throw InvalidArgument("need beta > 0 and T > 0");
	const double n = double(d.dim());
	if (std::abs(p - critical_exponent(n + ell)) > 1e-12) throw InvalidArgument("Orlicz condition needs p = p_{N+ell}");
	if (mu.interior() && mu.interior()->mode != WeightMode::DistanceWeighted)
		throw InvalidArgument("interior density must be given against d(y) dy");
	CriterionReport rep;
	rep.id = "prop53_orlicz";
	rep.params = {{"beta", beta}, {"p", p}, {"ell", double(ell)}, {"T", T}, {"N", n}};
	rep.predicted = beta - (n + ell) / 2;
	const double k = std::pow(T, 1 / (p - 1));
	const double a = detail::profile_exponent(mu.interior()), lp = detail::profile_log(mu.interior()) - beta;
	const double hint_a = ell == 1 && mu.interior() && mu.interior()->singular && mu.interior()->singular->anchor_on_boundary ? a - 1 : a;
	std::vector<double> sups;
	for (double s : sigmas) {
		double best = 0;
		Point arg = zs.front();
		for (const Point& z : zs) {
			const double v = detail::interior_functional(
			    mu, d, z, s, [&](const Point& y, double f) { return (ell ? d.distance(y) : 1.0) * orlicz_psi(k * f, beta); }, hint_a, lp, o);
			if (v > best) best = v, arg = z;
		}
		rep.samples.push_back({arg, s, best, std::nan(""), best});
		sups.push_back(best);
	}
	detail::conclude_log_power(rep, sigmas, sups, std::sqrt(T));
	return rep;
}

// sup over boundary z of int_{B(z,sigma) on the boundary} Psi(T^(1/(p-1)) h) dS, fitted against beta - (N+1)/2.
inline CriterionReport prop54_orlicz_boundary(const MeasureSpec& mu, const Domain& d, double beta, double T, const std::vector<Point>& zs,
                                              const std::vector<double>& sigmas, const QuadOptions& o = measure_tolerance()) {
	detail::require_samples(zs, sigmas);
	const double n = double(d.dim());
	const double p = critical_exponent(n + 1);
	if (!(p < 2)) throw InvalidArgument("boundary Orlicz condition needs p_{N+1} < 2");
	if (!(beta > 0) || !(T > 0)) throw InvalidArgument("need beta > 0 and T > 0");
	CriterionReport rep;
	rep.id = "prop54_orlicz_boundary";
	rep.params = {{"beta", beta}, {"p", p}, {"T", T}, {"N", n}};
	rep.predicted = beta - (n + 1) / 2;
	const double k = std::pow(T, 1 / (p - 1));
	const double a = detail::profile_exponent(mu.boundary()), lp = detail::profile_log(mu.boundary()) - beta;
	std::vector<double> sups;
	for (double s : sigmas) {
		double best = 0;
		Point arg = zs.front();
		for (const Point& z : zs) {
			if (!d.on_boundary(z)) continue;
			const double v = detail::boundary_functional(mu, d, z, s, [&](double h) { return orlicz_psi(k * h, beta); }, a, lp, o);
			if (v > best) best = v, arg = z;
		}
		rep.samples.push_back({arg, s, best, std::nan(""), best});
		sups.push_back(best);
	}
	detail::conclude_log_power(rep, sigmas, sups, std::sqrt(T));
	return rep;
}

// Strip Omega(r) = {d <= r} of Interval(L) against phi = sin(pi x / L): 2 (L/pi)(1 - cos(pi r/L)).
inline double interval_strip_phi(double L, double r) {
	r = std::min(r, 0.5 * L);
	return 2 * L / std::numbers::pi * (1 - std::cos(std::numbers::pi * r / L));
}

// (int_{2 sigma^2}^T (int_{Omega(sqrt r)} phi)^(-(p-1)) dr)^(-1/(p-1)) on Interval(L).
inline double thm13_rhs(double L, double p, double T, double sigma) {
	const double a = 2 * sigma * sigma;
	if (!(a < T)) throw InvalidArgument("need 2 sigma^2 < T");
	// r = a e^v.
	const QuadResult q = integrate_line(
	    [&](double v) {
		    const double r = a * std::exp(v);
		    return r * std::pow(interval_strip_phi(L, std::sqrt(r)), -(p - 1));
	    },
	    0, std::log(T / a), QuadOptions::relative(1e-10));
	require_converged(q, "strip bound integral");
	return std::pow(q.value, -1 / (p - 1));
}

struct StripSample {
	double sigma = 0;
	double weighted = 0;  // int_{Omega(sigma)} phi / d dnu
	double mass = 0;      // nu(B(z, R0) cap Omega(sigma)) at one boundary point
};

// Weighted strip integral against the weighted-strip bound, and the boundary-strip mass rate 2(p-2)/(p-1)
// (log rate [log(e + sqrt(T)/sigma)]^-1 at p = 2).
inline CriterionReport thm13_weighted(const std::vector<StripSample>& strips, double p, double T, const Domain& d) {
	if (d.kind() != DomainKind::Interval) throw InvalidArgument("weighted strip criterion needs Interval(L)");
	if (!(p >= 2)) throw InvalidArgument("strip rate needs p >= 2");
	if (strips.empty()) throw InvalidArgument("criterion needs nonempty strip samples");
	const double L = d.length();
	CriterionReport rep;
	rep.id = "thm13_weighted";
	rep.params = {{"p", p}, {"T", T}, {"L", L}};
	std::vector<double> s, ratio, mass;
	for (const auto& st : strips) {
		const double rhs = thm13_rhs(L, p, T, st.sigma);
		rep.samples.push_back({Point{0.0}, st.sigma, st.weighted, rhs, st.weighted / rhs});
		s.push_back(st.sigma);
		ratio.push_back(st.weighted / rhs);
		mass.push_back(st.mass);
	}
	std::optional<ExponentFit> fit;
	std::string note;
	rep.verdict = detail::growth_verdict(s, ratio, false, 1.0, fit, note);
	rep.note = note;
	double cmax = 0;
	for (double r : ratio) cmax = std::max(cmax, r);
	rep.params["empirical_constant"] = cmax;
	if (fit) rep.params["ratio_slope"] = fit->slope;
	if (std::all_of(mass.begin(), mass.end(), [](double v) { return v == 0; })) return rep;
	try {
		if (p > 2) {
			rep.predicted = 2 * (p - 2) / (p - 1);
			rep.fit = fit_exponent(s, mass);
			rep.fit_kind = "power";
			if (rep.fit->slope < *rep.predicted - 0.1) {
				rep.verdict = Verdict::Violated;
				rep.note = "strip mass decays slower than the rate";
			}
		} else {
			rep.predicted = -1;
			rep.fit = fit_log_power(s, mass, std::sqrt(T));
			rep.fit_kind = "log-power";
			if (rep.fit->slope > *rep.predicted + 0.1) {
				rep.verdict = Verdict::Violated;
				rep.note = "strip mass decays slower than the rate";
			}
		}
	} catch (const InvalidArgument& e) {
		rep.verdict = detail::worst(rep.verdict, Verdict::Inconclusive);
		rep.note = e.what();
	}
	return rep;
}

// Strip samples of a measure given directly: phi/d against mu on Omega(sigma), mass of B(0, R0) cap Omega(sigma).
inline std::vector<StripSample> measure_strips(const MeasureSpec& mu, const Domain& d, const std::vector<double>& sigmas, double R0 = 0.5) {
	if (d.kind() != DomainKind::Interval) throw InvalidArgument("strip samples need Interval(L)");
	const double L = d.length();
	std::vector<StripSample> out;
	for (double s : sigmas) {
		if (!(s > 0 && s <= 0.5 * L)) throw InvalidArgument("strip width must lie in (0, L/2]");
		auto phi_over_d = [&](const Point& y) {
			const double dy = d.distance(y);
			if (dy > s) return 0.0;
			const double x = y[0];
			// sin(pi x/L)/d stays bounded at the ends: pi/L there.
			return dy == 0 ? std::numbers::pi / L : std::sin(std::numbers::pi * x / L) / dy;
		};
		const double w = integrate_measure(mu, d, Point{0.0}, s, phi_over_d, measure_tolerance()).value +
		                 integrate_measure(mu, d, Point{L}, s, phi_over_d, measure_tolerance()).value;
		const double m = ball_mass(mu, d, Point{0.0}, std::min(s, R0));
		out.push_back({s, w, m});
	}
	return out;
}

// Strip samples of the recovered initial trace of d u: pairings with phi 1{d <= sigma} (so phi/d against d u),
// extrapolated to t = 0 over the earliest levels.
inline std::vector<StripSample> trace_strips(const GridFunction& u, const std::vector<double>& sigmas, double R0 = 0.5,
                                             std::vector<TraceEstimate>* estimates = nullptr) {
	const Domain& d = u.grid().domain();
	if (d.kind() != DomainKind::Interval) throw InvalidArgument("strip samples need Interval(L)");
	const double L = d.length();
	const auto levels = earliest_levels(u.grid());
	std::vector<StripSample> out;
	for (double s : sigmas) {
		if (!(s > 0 && s <= 0.5 * L)) throw InvalidArgument("strip width must lie in (0, L/2]");
		auto weight = [&, s](double y) {
			const double dy = d.distance(Point{y});
			return dy <= s ? std::sin(std::numbers::pi * y / L) : 0.0;
		};
		std::vector<double> ts, ws, ms;
		for (std::size_t k : levels) {
			ts.push_back(u.grid().times()[k]);
			// phi/d times d u = phi u.
			ws.push_back(detail::line_pairing(u, k, weight, 0, s) + detail::line_pairing(u, k, weight, L - s, L));
			ms.push_back(detail::line_pairing(u, k, [&](double y) { return d.distance(Point{y}); }, 0, std::min(s, R0)));
		}
		const TraceEstimate ew = extrapolate_trace(ts, ws), em = extrapolate_trace(ts, ms);
		if (estimates) {
			estimates->push_back(ew);
			estimates->push_back(em);
		}
		out.push_back({s, std::max(ew.limit, 0.0), std::max(em.limit, 0.0)});
	}
	return out;
}

} // namespace mildheat

#endif // MILDHEAT_CRITERIA_HPP
