#ifndef MILDHEAT_MEASURE_HPP
#define MILDHEAT_MEASURE_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "point.hpp"
#include "quadrature.hpp"

namespace mildheat {

enum class WeightMode { Lebesgue, DistanceWeighted };
enum class FamilyId { Mu1, Mu2, Mu3 };

inline std::string to_string(FamilyId f) {
	switch (f) {
	case FamilyId::Mu1: return "mu1";
	case FamilyId::Mu2: return "mu2";
	case FamilyId::Mu3: return "mu3";
	}
	return "?";
}

struct SingularFamily {
	FamilyId id = FamilyId::Mu1;
	Point anchor;
	double p = 2;
	double kappa = 1;
};

// L(r) = log(e + 1/r).
inline double log_weight(double r) { return std::log(std::numbers::e + 1.0 / r); }

// r^-exponent L(r)^-log_power.
struct RadialProfile {
	double exponent = 0;
	double log_power = 0;
	double operator()(double r) const {
		double v = std::pow(r, -exponent);
		if (log_power != 0) v *= std::pow(log_weight(r), -log_power);
		return v;
	}
};

// Density value at y; r is the exact distance to the singular anchor when the caller knows it, NaN otherwise.
using DensityFn = std::function<double(const Point& y, double r)>;

struct SingularMeta {
	Point anchor;
	RadialProfile profile;
	bool anchor_on_boundary = false;
	std::optional<FamilyId> family;
	double p = 0;
};

struct Atom {
	Point at;
	double mass = 0;
};

// Density part of a measure: interior (against dx or d(x)dx) or boundary (against dS).
struct DensityPart {
	DensityFn f;
	WeightMode mode = WeightMode::Lebesgue;
	std::optional<Sphere> support;
	std::optional<SingularMeta> singular;
	std::vector<double> breakpoints;  // one-dimensional discontinuities
	std::vector<BoxRegion> cells;     // boxes on which the density is constant, covering its support
};

class MeasureSpec {
public:
	MeasureSpec() = default;

	MeasureSpec& set_interior(DensityPart part) {
		interior_ = std::move(part);
		return *this;
	}
	MeasureSpec& set_boundary(DensityPart part) {
		boundary_ = std::move(part);
		return *this;
	}
	MeasureSpec& add_atom(const Point& at, double mass) {
		if (!(mass > 0) || !std::isfinite(mass)) throw InvalidArgument("atom mass must be positive");
		atoms_.push_back(Atom{at, mass});
		return *this;
	}

	const std::optional<DensityPart>& interior() const { return interior_; }
	const std::optional<DensityPart>& boundary() const { return boundary_; }
	const std::vector<Atom>& atoms() const { return atoms_; }
	double scale() const { return scale_; }
	const std::optional<SingularFamily>& family() const { return family_; }
	bool is_zero() const { return scale_ == 0 || (!interior_ && !boundary_ && atoms_.empty()); }

	// Interior density against its weight, including the scale.
	double interior_density(const Point& y, double r = std::numeric_limits<double>::quiet_NaN()) const {
		return interior_ ? scale_ * checked(interior_->f(y, anchor_distance(*interior_, y, r))) : 0.0;
	}
	double boundary_density(const Point& y, double r = std::numeric_limits<double>::quiet_NaN()) const {
		return boundary_ ? scale_ * checked(boundary_->f(y, anchor_distance(*boundary_, y, r))) : 0.0;
	}

	MeasureSpec scaled(double kappa) const {
		if (!(kappa >= 0) || !std::isfinite(kappa)) throw InvalidArgument("scale must be nonnegative and finite");
		MeasureSpec m = *this;
		m.scale_ *= kappa;
		if (m.family_) m.family_->kappa *= kappa;
		return m;
	}

	void set_family(const SingularFamily& f) { family_ = f; }

	static double anchor_distance(const DensityPart& part, const Point& y, double r) {
		if (!std::isnan(r) || !part.singular) return r;
		return distance(y, part.singular->anchor);
	}

private:
	static double checked(double v) {
		if (v < 0 || std::isnan(v)) throw InvalidArgument("density must be nonnegative");
		return v;
	}
	std::optional<DensityPart> interior_;
	std::optional<DensityPart> boundary_;
	std::vector<Atom> atoms_;
	double scale_ = 1;
	std::optional<SingularFamily> family_;
};

inline MeasureSpec scale(const MeasureSpec& mu, double kappa) { return mu.scaled(kappa); }

namespace detail {

inline bool is_critical(double p, double pk) { return std::abs(p - pk) <= 1e-12; }

} // namespace detail

// r^-a L(r)^-b on B(z, 1), r = |y - z|: against d(y) dy in the interior or dS on the boundary.
inline MeasureSpec make_power_density(const Point& z, const RadialProfile& prof, bool on_boundary, const Domain& d) {
	if (!d.contains(z)) throw InvalidFamily("anchor outside the domain");
	if (on_boundary && !d.on_boundary(z)) throw InvalidFamily("surface density needs a boundary anchor");
	DensityPart part;
	part.mode = on_boundary ? WeightMode::Lebesgue : WeightMode::DistanceWeighted;
	part.support = Sphere{z, 1.0};
	part.singular = SingularMeta{z, prof, d.on_boundary(z), std::nullopt, 0};
	part.f = [z, prof](const Point& y, double r) {
		if (std::isnan(r)) r = distance(y, z);
		if (r > 1.0) return 0.0;
		if (r == 0) return std::numeric_limits<double>::infinity();
		return prof(r);
	};
	MeasureSpec m;
	if (on_boundary)
		m.set_boundary(std::move(part));
	else
		m.set_interior(std::move(part));
	return m;
}

inline MeasureSpec make_family(const SingularFamily& fam, const Domain& d) {
	if (!d.has_boundary()) throw InvalidFamily("singular families need a domain with boundary");
	if (!d.contains(fam.anchor)) throw InvalidFamily("anchor outside the domain");
	if (!(fam.kappa >= 0) || !std::isfinite(fam.kappa)) throw InvalidFamily("kappa must be nonnegative");
	if (!(fam.p > 1) || !std::isfinite(fam.p)) throw InvalidFamily("p must exceed 1");
	const double n = static_cast<double>(d.dim());
	const double pN = critical_exponent(n), pN1 = critical_exponent(n + 1);
	RadialProfile prof;
	bool boundary_part = false;
	switch (fam.id) {
	case FamilyId::Mu1:
		if (d.on_boundary(fam.anchor)) throw InvalidFamily("mu1 needs an interior anchor");
		if (fam.p < pN - 1e-12) throw InvalidFamily("mu1 needs p >= p_N");
		prof = detail::is_critical(fam.p, pN) ? RadialProfile{n, n / 2 + 1} : RadialProfile{2 / (fam.p - 1), 0};
		break;
	case FamilyId::Mu2:
		if (!d.on_boundary(fam.anchor)) throw InvalidFamily("mu2 needs a boundary anchor");
		if (fam.p < pN1 - 1e-12) throw InvalidFamily("mu2 needs p >= p_{N+1}");
		prof = detail::is_critical(fam.p, pN1) ? RadialProfile{n + 1, (n + 1) / 2 + 1} : RadialProfile{2 / (fam.p - 1), 0};
		break;
	case FamilyId::Mu3:
		if (!d.on_boundary(fam.anchor)) throw InvalidFamily("mu3 needs a boundary anchor");
		if (d.kind() != DomainKind::HalfSpace || d.dim() < 2) throw InvalidFamily("mu3 needs a half-space of dimension at least 2");
		if (fam.p < pN1 - 1e-12 || fam.p >= 2) throw InvalidFamily("mu3 needs p_{N+1} <= p < 2");
		prof = detail::is_critical(fam.p, pN1) ? RadialProfile{n - 1, (n + 1) / 2 + 1}
		                                       : RadialProfile{2 * (2 - fam.p) / (fam.p - 1), 0};
		boundary_part = true;
		break;
	}
	MeasureSpec m = make_power_density(fam.anchor, prof, boundary_part, d);
	auto& part = boundary_part ? m.boundary() : m.interior();
	SingularMeta meta = *part->singular;
	meta.family = fam.id;
	meta.p = fam.p;
	DensityPart copy = *part;
	copy.singular = meta;
	if (boundary_part)
		m.set_boundary(std::move(copy));
	else
		m.set_interior(std::move(copy));
	m.set_family(SingularFamily{fam.id, fam.anchor, fam.p, 1.0});
	return m.scaled(fam.kappa);
}

// Smooth bump A exp(1 - 1/(1 - |y-c|^2/R^2)) on B(c, R).
inline MeasureSpec make_bump(const Point& centre, double radius, double amplitude, WeightMode mode) {
	if (!(radius > 0) || !(amplitude >= 0)) throw InvalidArgument("bump needs positive radius and nonnegative amplitude");
	DensityPart part;
	part.mode = mode;
	part.support = Sphere{centre, radius};
	part.f = [centre, radius, amplitude](const Point& y, double) {
		const double q = squared_distance(y, centre) / (radius * radius);
		if (q >= 1) return 0.0;
		return amplitude * std::exp(1 - 1 / (1 - q));
	};
	MeasureSpec m;
	m.set_interior(std::move(part));
	return m;
}

// Tensor-grid table with piecewise-constant (nearest lower sample) interpolation.
struct TabulatedDensity {
	std::vector<std::vector<double>> axes;  // sorted unique coordinates per axis
	std::vector<double> values;             // row-major over the axes

	double operator()(const Point& y) const {
		std::size_t idx = 0;
		for (std::size_t i = 0; i < axes.size(); ++i) {
			const auto& a = axes[i];
			if (y[i] < a.front() || y[i] > a.back()) return 0.0;
			auto it = std::upper_bound(a.begin(), a.end(), y[i]);
			std::size_t k = static_cast<std::size_t>(it - a.begin()) - 1;
			if (k + 1 == a.size() && a.size() > 1) k = a.size() - 2;
			idx = idx * a.size() + k;
		}
		return values[idx];
	}
};

inline double parse_number(const std::string& s) {
	double v = 0;
	const char* b = s.data();
	while (b < s.data() + s.size() && (*b == ' ' || *b == '\t')) ++b;
	const char* e = s.data() + s.size();
	while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
	auto [ptr, ec] = std::from_chars(b, e, v);
	if (ec != std::errc() || ptr != e) throw InvalidArgument("not a number: '" + s + "'");
	return v;
}

// CSV with N coordinate columns followed by a density column; a non-numeric first line is a header.
inline TabulatedDensity parse_density_table(const std::string& text, std::size_t dim) {
	std::istringstream in(text);
	std::string line;
	std::vector<std::vector<double>> rows;
	bool first = true;
	while (std::getline(in, line)) {
		if (line.empty() || line == "\r" || line[0] == '#') continue;
		std::vector<std::string> cells;
		std::stringstream ls(line);
		std::string c;
		while (std::getline(ls, c, ',')) cells.push_back(c);
		if (cells.size() != dim + 1) throw InvalidArgument("density table rows need " + std::to_string(dim + 1) + " columns");
		std::vector<double> row;
		try {
			for (const auto& x : cells) row.push_back(parse_number(x));
		} catch (const InvalidArgument&) {
			if (first) {
				first = false;
				continue;
			}
			throw;
		}
		first = false;
		rows.push_back(row);
	}
	if (rows.empty()) throw InvalidArgument("density table is empty");
	TabulatedDensity t;
	t.axes.resize(dim);
	for (std::size_t i = 0; i < dim; ++i) {
		for (const auto& r : rows) t.axes[i].push_back(r[i]);
		std::sort(t.axes[i].begin(), t.axes[i].end());
		t.axes[i].erase(std::unique(t.axes[i].begin(), t.axes[i].end()), t.axes[i].end());
	}
	std::size_t total = 1;
	for (const auto& a : t.axes) total *= a.size();
	if (total != rows.size()) throw InvalidArgument("density table is not a full tensor grid");
	t.values.assign(total, std::numeric_limits<double>::quiet_NaN());
	for (const auto& r : rows) {
		std::size_t idx = 0;
		for (std::size_t i = 0; i < dim; ++i) {
			const auto& a = t.axes[i];
			idx = idx * a.size() + static_cast<std::size_t>(std::lower_bound(a.begin(), a.end(), r[i]) - a.begin());
		}
		if (r[dim] < 0 || !std::isfinite(r[dim])) throw InvalidArgument("density table values must be nonnegative");
		t.values[idx] = r[dim];
	}
	return t;
}

inline MeasureSpec make_tabulated(const TabulatedDensity& table, WeightMode mode) {
	DensityPart part;
	part.mode = mode;
	part.f = [table](const Point& y, double) { return table(y); };
	const std::size_t n = table.axes.size();
	if (n == 1) {
		part.breakpoints = table.axes[0];
	} else {
		std::size_t total = 1;
		for (const auto& a : table.axes) total *= a.size() > 1 ? a.size() - 1 : 0;
		for (std::size_t idx = 0; idx < total; ++idx) {
			BoxRegion b{Point(n), Point(n)};
			std::size_t rest = idx;
			for (std::size_t i = n; i-- > 0;) {
				const std::size_t m = table.axes[i].size() - 1, k = rest % m;
				rest /= m;
				b.lo[i] = table.axes[i][k];
				b.hi[i] = table.axes[i][k + 1];
			}
			part.cells.push_back(b);
		}
	}
	Point c(n);
	double r2 = 0;
	for (std::size_t i = 0; i < n; ++i) {
		c[i] = 0.5 * (table.axes[i].front() + table.axes[i].back());
		const double h = 0.5 * (table.axes[i].back() - table.axes[i].front());
		r2 += h * h;
	}
	part.support = Sphere{c, std::sqrt(r2) * (1 + 1e-12) + 1e-300};
	MeasureSpec m;
	m.set_interior(std::move(part));
	return m;
}

namespace detail {

inline std::optional<SingularityHint> interior_hint(const DensityPart& part) {
	if (!part.singular) return std::nullopt;
	double a = part.singular->profile.exponent;
	// d(y) vanishes linearly at a boundary anchor.
	if (part.mode == WeightMode::DistanceWeighted && part.singular->anchor_on_boundary) a -= 1;
	return SingularityHint{part.singular->anchor, a, part.singular->profile.log_power};
}

inline std::optional<SingularityHint> boundary_hint(const DensityPart& part) {
	if (!part.singular) return std::nullopt;
	return SingularityHint{part.singular->anchor, part.singular->profile.exponent, part.singular->profile.log_power};
}

inline Clip domain_clip(const Domain& d) { return Clip{d.last_lo(), d.last_hi()}; }

} // namespace detail

// Integral of phi over the closed ball B(z, radius) intersected with the domain, against mu.
// phi(y) must be finite on the support; the interior weight d(y) is applied here.
inline QuadResult integrate_measure(const MeasureSpec& mu, const Domain& d, const Point& z, double radius,
                                    const std::function<double(const Point&)>& phi, const QuadOptions& opts) {
	if (!(radius > 0)) throw InvalidArgument("radius must be positive");
	QuadResult total;
	total.evaluations = 1;
	if (mu.scale() == 0) return total;
	const double parts = 2.0;
	if (const auto& in = mu.interior()) {
		auto g = [&](const Point& y, double r) {
			const double rho = mu.interior_density(y, r);
			if (rho == 0) return 0.0;
			const double w = in->mode == WeightMode::DistanceWeighted ? d.distance(y) : 1.0;
			return rho * w * phi(y);
		};
		BallRegion reg{z, radius, in->support, detail::domain_clip(d)};
		QuadResult q;
		if (d.dim() > 1 && !in->cells.empty()) {
			const QuadOptions each = detail::share(opts, parts * static_cast<double>(in->cells.size()));
			for (const auto& cell : in->cells) {
				Point c(d.dim());
				double gap = 0;
				for (std::size_t i = 0; i < d.dim(); ++i) {
					c[i] = 0.5 * (cell.lo[i] + cell.hi[i]);
					const double e = std::max({cell.lo[i] - z[i], z[i] - cell.hi[i], 0.0});
					gap += e * e;
				}
				if (std::sqrt(gap) > radius || in->f(c, detail::nan()) == 0) continue;
				q = detail::combine(q, detail::body_integral(g, detail::ConvexBody{d.dim(), Sphere{z, radius}, in->support,
				                                                                     detail::domain_clip(d), cell},
				                                             std::nullopt, each));
			}
		} else if (d.dim() == 1) {
			double lo = std::max(z[0] - radius, d.last_lo()), hi = std::min(z[0] + radius, d.last_hi());
			if (in->support) {
				lo = std::max(lo, in->support->center[0] - in->support->radius);
				hi = std::min(hi, in->support->center[0] + in->support->radius);
			}
			q = detail::interval_integral([&](double y, double r) { return g(Point{y}, r); }, lo, hi, detail::interior_hint(*in),
			                              detail::share(opts, parts), in->breakpoints);
		} else {
			q = integrate(g, reg, detail::share(opts, parts), detail::interior_hint(*in));
		}
		require_converged(q, "interior measure integral");
		total = detail::combine(total, q);
	}
	if (const auto& bd = mu.boundary()) {
		auto h = [&](const Point& y, double r) {
			const double v = mu.boundary_density(y, r);
			return v == 0 ? 0.0 : v * phi(y);
		};
		if (d.kind() == DomainKind::HalfSpace && d.dim() == 1) {
			if (std::abs(z[0]) <= radius * (1 + 1e-14)) total.value += h(Point{0.0}, detail::nan());
		} else if (d.kind() == DomainKind::Interval) {
			for (double b : {0.0, d.length()})
				if (std::abs(z[0] - b) <= radius * (1 + 1e-14)) total.value += h(Point{b}, detail::nan());
		} else if (d.kind() == DomainKind::HalfSpace) {
			const double zn = z.last();
			if (zn <= radius) {
				Point c = z;
				c.last() = 0;
				const double rr = std::sqrt(std::max(radius * radius - zn * zn, 0.0));
				if (rr > 0) {
					const QuadResult q = integrate(h, BoundaryPatch{c, rr, bd->support}, detail::share(opts, parts), detail::boundary_hint(*bd));
					require_converged(q, "boundary measure integral");
					total = detail::combine(total, q);
				}
			}
		}
	}
	for (const auto& a : mu.atoms())
		if (distance(a.at, z) <= radius * (1 + 1e-14)) total.value += mu.scale() * a.mass * phi(a.at);
	return total;
}

inline QuadOptions measure_tolerance(double rel = 1e-9) { return QuadOptions::relative(rel); }

inline double ball_mass(const MeasureSpec& mu, const Domain& d, const Point& z, double sigma,
                        const QuadOptions& o = measure_tolerance()) {
	if (!(sigma > 0)) throw InvalidArgument("sigma must be positive");
	d.require(z, "ball centre");
	return integrate_measure(mu, d, z, sigma, [](const Point&) { return 1.0; }, o).value;
}

// Integral of 1/(d(y) + sqrt(s)) over B(z, sqrt(s)).
inline double weighted_ball_integral(const MeasureSpec& mu, const Domain& d, const Point& z, double s,
                                     const QuadOptions& o = measure_tolerance()) {
	if (!(s > 0)) throw InvalidArgument("s must be positive");
	d.require(z, "ball centre");
	const double rs = std::sqrt(s);
	return integrate_measure(mu, d, z, rs, [&](const Point& y) { return 1.0 / (d.distance(y) + rs); }, o).value;
}

// Radius of a ball around the origin that contains the support of the density parts and atoms.
inline double support_extent(const MeasureSpec& mu, const Point& origin) {
	double r = 0;
	for (const auto* part : {&mu.interior(), &mu.boundary()})
		if (*part) {
			if (!(*part)->support) return std::numeric_limits<double>::infinity();
			r = std::max(r, distance(origin, (*part)->support->center) + (*part)->support->radius);
		}
	for (const auto& a : mu.atoms()) r = std::max(r, distance(origin, a.at));
	return r;
}

} // namespace mildheat

#endif // MILDHEAT_MEASURE_HPP
