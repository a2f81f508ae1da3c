#ifndef MILDHEAT_SOLVER_HPP
#define MILDHEAT_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "measure.hpp"
#include "quadrature.hpp"

namespace mildheat {

struct GridParams {
	double T = 1;
	double theta = 1e-3;      // t_1 = theta T
	double time_ratio = 1.3;  // largest ratio between consecutive levels
	double h_min = 1e-4;
	double grading = 0.05;  // spacing grows like grading * distance to the nearest special point
	double h_max = 0.05;
	double far = 0;  // right end on the half-line; 0 picks one from the data support
	std::vector<double> extra_times;

	// Halves every spacing: spatial widths and the logarithmic time step.
	GridParams refined() const {
		GridParams g = *this;
		g.h_min *= 0.5;
		g.h_max *= 0.5;
		g.grading *= 0.5;
		g.time_ratio = std::sqrt(time_ratio);
		return g;
	}
};

namespace detail {

inline void require_line_domain(const Domain& d) {
	if (d.dim() != 1 || !d.has_boundary()) throw UnsupportedDomain("the solver supports HalfSpace(1) and Interval(L)");
}

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
	threads = std::max<std::size_t>(1, std::min(threads, n));
	if (threads == 1) {
		for (std::size_t i = 0; i < n; ++i) f(i);
		return;
	}
	std::vector<std::thread> pool;
	for (std::size_t w = 0; w < threads; ++w)
		pool.emplace_back([&, w] {
			for (std::size_t i = w; i < n; i += threads) f(i);
		});
	for (auto& t : pool) t.join();
}

} // namespace detail

class SpaceTimeGrid {
public:
	SpaceTimeGrid(std::vector<double> nodes, std::vector<double> times, double horizon, const Domain& d, std::size_t min_levels = 2)
		: x_(std::move(nodes)), t_(std::move(times)), T_(horizon), domain_(d) {
		detail::require_line_domain(d);
		if (x_.size() < 2) throw InvalidArgument("grid needs at least two nodes");
		if (t_.size() < std::max<std::size_t>(min_levels, 1)) throw InvalidArgument("grid has too few time levels");
		for (std::size_t i = 0; i < x_.size(); ++i) {
			if (!d.contains(Point{x_[i]})) throw InvalidArgument("grid node outside the domain");
			if (i > 0 && !(x_[i] > x_[i - 1])) throw InvalidArgument("grid nodes must increase strictly");
		}
		if (!(t_.front() > 0)) throw InvalidArgument("time levels must be positive");
		for (std::size_t k = 1; k < t_.size(); ++k)
			if (!(t_[k] > t_[k - 1])) throw InvalidArgument("time levels must increase strictly");
		if (t_.back() > T_ * (1 + 1e-12)) throw InvalidArgument("time levels exceed the horizon");
		for (double x : x_) d_.push_back(d.distance(Point{x}));
	}

	// Graded grid for the data mu: nodes cluster at the boundary, singular anchors and atoms.
	static SpaceTimeGrid build(const Domain& d, const MeasureSpec& mu, const GridParams& g) {
		detail::require_line_domain(d);
		if (!(g.T > 0) || !(g.theta > 0 && g.theta < 1) || !(g.time_ratio > 1) || !(g.h_min > 0) || !(g.grading > 0) ||
		    !(g.h_max >= g.h_min))
			throw InvalidArgument("invalid grid parameters");
		std::vector<double> specials{0.0};
		double hi;
		if (d.kind() == DomainKind::Interval) {
			hi = d.length();
			specials.push_back(hi);
		} else {
			hi = g.far;
			if (!(hi > 0)) {
				const double ext = support_extent(mu, Point{0.0});
				if (!std::isfinite(ext)) throw InvalidArgument("measure support must be bounded on the half-line");
				hi = std::max(ext, 1.0) + 12 * std::sqrt(g.T);
			}
		}
		auto add = [&](double x) {
			if (x > 0 && x < hi) specials.push_back(x);
		};
		for (const auto* part : {&mu.interior(), &mu.boundary()})
			if (*part && (*part)->singular) add((*part)->singular->anchor[0]);
		for (const auto& a : mu.atoms()) add(a.at[0]);
		std::sort(specials.begin(), specials.end());
		specials.erase(std::unique(specials.begin(), specials.end()), specials.end());
		auto spacing = [&](double x) {
			double dist = std::numeric_limits<double>::infinity();
			for (double s : specials) dist = std::min(dist, std::abs(x - s));
			return std::clamp(g.grading * dist, g.h_min, g.h_max);
		};
		std::vector<double> nodes{0.0};
		std::size_t next = 1;
		double x = 0;
		while (x < hi) {
			double h = spacing(x);
			double target = next < specials.size() ? specials[next] : hi;
			if (d.kind() == DomainKind::HalfSpace) target = std::min(target, hi);
			if (x + 1.5 * h >= target) {
				x = target;
				if (next < specials.size() && specials[next] == target) ++next;
			} else {
				x += h;
			}
			nodes.push_back(x);
		}
		std::vector<double> times;
		const double t1 = g.theta * g.T;
		const auto steps = static_cast<std::size_t>(std::ceil(std::log(g.T / t1) / std::log(g.time_ratio) - 1e-9));
		const double ratio = std::pow(g.T / t1, 1.0 / static_cast<double>(std::max<std::size_t>(steps, 1)));
		for (std::size_t k = 0; k <= steps; ++k) times.push_back(k == steps ? g.T : t1 * std::pow(ratio, static_cast<double>(k)));
		for (double e : g.extra_times) {
			if (!(e > 0 && e <= g.T)) throw InvalidArgument("extra time level outside (0, T]");
			times.push_back(e);
		}
		std::sort(times.begin(), times.end());
		std::vector<double> uniq;
		for (double t : times)
			if (uniq.empty() || t > uniq.back() * (1 + 1e-9)) uniq.push_back(t);
			else uniq.back() = std::max(uniq.back(), t);
		return SpaceTimeGrid(std::move(nodes), std::move(uniq), g.T, d);
	}

	const std::vector<double>& nodes() const { return x_; }
	const std::vector<double>& times() const { return t_; }
	const std::vector<double>& distances() const { return d_; }
	double horizon() const { return T_; }
	const Domain& domain() const { return domain_; }
	std::size_t n_nodes() const { return x_.size(); }
	std::size_t n_levels() const { return t_.size(); }
	bool is_boundary(std::size_t i) const { return d_[i] == 0; }

	// Level index of time t, or nothing.
	std::optional<std::size_t> level_of(double t) const {
		for (std::size_t k = 0; k < t_.size(); ++k)
			if (std::abs(t_[k] - t) <= 1e-9 * t) return k;
		return std::nullopt;
	}

private:
	std::vector<double> x_, t_, d_;
	double T_;
	Domain domain_;
};

class GridFunction {
public:
	GridFunction() = default;
	explicit GridFunction(std::shared_ptr<const SpaceTimeGrid> g)
		: grid_(std::move(g)), v_(grid_->n_levels() * grid_->n_nodes(), 0.0) {}

	const SpaceTimeGrid& grid() const { return *grid_; }
	std::shared_ptr<const SpaceTimeGrid> grid_ptr() const { return grid_; }
	double at(std::size_t k, std::size_t i) const { return v_[k * grid_->n_nodes() + i]; }
	double& at(std::size_t k, std::size_t i) { return v_[k * grid_->n_nodes() + i]; }
	const std::vector<double>& values() const { return v_; }
	std::vector<double>& values() { return v_; }

	// Piecewise-linear reconstruction in space at level k; zero outside the node range.
	double interpolate(std::size_t k, double x) const {
		const auto& xs = grid_->nodes();
		if (x < xs.front() || x > xs.back()) return 0.0;
		auto it = std::upper_bound(xs.begin(), xs.end(), x);
		if (it == xs.end()) return at(k, xs.size() - 1);
		const std::size_t j = static_cast<std::size_t>(it - xs.begin());
		const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
		return (1 - w) * at(k, j - 1) + w * at(k, j);
	}

	double sup() const {
		double s = 0;
		for (double v : v_) s = std::max(s, v);
		return s;
	}

	// Trapezoid rule for the integral of d(x) u(x, t_k).
	double weighted_l1(std::size_t k) const {
		const auto& xs = grid_->nodes();
		const auto& ds = grid_->distances();
		double s = 0;
		for (std::size_t i = 1; i < xs.size(); ++i)
			s += 0.5 * (xs[i] - xs[i - 1]) * (ds[i] * std::abs(at(k, i)) + ds[i - 1] * std::abs(at(k, i - 1)));
		return s;
	}

private:
	std::shared_ptr<const SpaceTimeGrid> grid_;
	std::vector<double> v_;
};

namespace detail {

inline double heat1(double u, double tau) { return std::exp(-u * u / (4 * tau)) / std::sqrt(4 * std::numbers::pi * tau); }

// Adds the hat-function weights of y -> g(c - y) over the segments between nodes lo..hi to row[0..hi-lo].
// erfc(|z|) and the Gaussian are evaluated once per node; differences of erf are formed without cancellation.
inline void add_image_row(const std::vector<double>& xs, std::size_t lo, std::size_t hi, double c, double tau, double sign,
                          double* row) {
	const double s = 2 * std::sqrt(tau);
	double zb = (c - xs[lo]) / s;
	double qb = std::erfc(std::abs(zb));
	double gb = heat1(c - xs[lo], tau);
	for (std::size_t j = lo; j < hi; ++j) {
		const double za = zb, qa = qb, ga = gb;
		const double a = xs[j], b = xs[j + 1], h = b - a;
		zb = (c - b) / s;
		qb = std::erfc(std::abs(zb));
		gb = heat1(c - b, tau);
		// erf(za) - erf(zb) with za > zb.
		double diff;
		if (zb >= 0) diff = qb - qa;
		else if (za <= 0) diff = qa - qb;
		else diff = 2 - qa - qb;
		const double m0 = 0.5 * diff;
		if (m0 == 0) continue;
		const double right = ((c - a) * m0 - 2 * tau * (gb - ga)) / h;
		const double left = ((b - c) * m0 + 2 * tau * (gb - ga)) / h;
		row[j - lo] += sign * std::max(left, 0.0);
		row[j + 1 - lo] += sign * std::max(right, 0.0);
	}
}

} // namespace detail

// Integrals of G(x_i, y, tau) against the hat functions of the grid nodes.
class HatKernel {
public:
	explicit HatKernel(const SpaceTimeGrid& g) : g_(g) {}

	std::pair<std::size_t, std::size_t> band(std::size_t i, double tau) const {
		const auto& xs = g_.nodes();
		const double R = 13.5 * std::sqrt(tau);
		const std::size_t lo = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), xs[i] - R) - xs.begin());
		const std::size_t hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), xs[i] + R) - xs.begin());
		return {lo == 0 ? 0 : lo - 1, std::min(hi, xs.size() - 1)};
	}

	// row has length hi - lo + 1 for band (lo, hi) and receives scale * weights.
	void add_row(std::size_t i, double tau, std::size_t lo, std::size_t hi, double* row, double scale) const {
		if (g_.is_boundary(i) || hi <= lo) return;
		const auto& xs = g_.nodes();
		const double x = xs[i];
		const std::size_t n = hi - lo + 1;
		tmp_.assign(n, 0.0);
		const Domain& d = g_.domain();
		if (d.kind() == DomainKind::HalfSpace) {
			detail::add_image_row(xs, lo, hi, x, tau, 1.0, tmp_.data());
			if (x < 13.5 * std::sqrt(tau)) detail::add_image_row(xs, lo, hi, -x, tau, -1.0, tmp_.data());
		} else {
			const double L = d.length();
			const long K = static_cast<long>(detail::image_count(L, tau, 1e-18, 1'000'000));
			const double R = 13.5 * std::sqrt(tau), ylo = xs[lo], yhi = xs[hi];
			for (long k = -K; k <= K; ++k)
				for (const double c : {x + 2.0 * k * L, -x - 2.0 * k * L})
					if (c > ylo - R && c < yhi + R) detail::add_image_row(xs, lo, hi, c, tau, c == x + 2.0 * k * L ? 1.0 : -1.0, tmp_.data());
		}
		for (std::size_t c = 0; c < n; ++c)
			if (!g_.is_boundary(lo + c)) row[c] += scale * std::max(tmp_[c], 0.0);
	}

private:
	const SpaceTimeGrid& g_;
	mutable std::vector<double> tmp_;
};

// Banded matrices of the time-stepping recursion D_k = S_k D_{k-1} + A_k F_{k-1} + B_k F_k.
class DuhamelOperator {
public:
	DuhamelOperator(std::shared_ptr<const SpaceTimeGrid> g, std::size_t threads = 1) : g_(std::move(g)) {
		const std::size_t M = g_->n_levels(), J = g_->n_nodes();
		levels_.resize(M);
		const auto [gx, gw] = gauss_legendre(8);
		detail::parallel_for(M, threads, [&](std::size_t k) {
			HatKernel hk(*g_);
			const double t = g_->times()[k];
			const double dt = k == 0 ? t : t - g_->times()[k - 1];
			Level& L = levels_[k];
			L.lo.resize(J);
			L.off.resize(J + 1);
			L.off[0] = 0;
			for (std::size_t i = 0; i < J; ++i) {
				auto [lo, hi] = hk.band(i, dt);
				if (g_->is_boundary(i)) hi = lo;
				L.lo[i] = lo;
				L.off[i + 1] = L.off[i] + (hi >= lo ? hi - lo + 1 : 0);
			}
			const std::size_t nnz = L.off[J];
			std::vector<double> S(k == 0 ? 0 : nnz, 0.0), A(nnz, 0.0), B(nnz, 0.0);
			for (std::size_t i = 0; i < J; ++i) {
				if (g_->is_boundary(i)) continue;
				const std::size_t lo = L.lo[i], n = L.off[i + 1] - L.off[i], hi = lo + n - 1;
				if (k > 0) hk.add_row(i, dt, lo, hi, S.data() + L.off[i], 1.0);
				// tau = dt v on panels geometric towards v = 0; below tau0 the kernel acts as the identity.
				const double h = std::min(i > 0 ? g_->nodes()[i] - g_->nodes()[i - 1] : INFINITY,
				                          i + 1 < J ? g_->nodes()[i + 1] - g_->nodes()[i] : INFINITY);
				const double tau0 = std::min(dt, 1e-2 * h * h);
				A[L.off[i] + (i - lo)] += 0.5 * tau0 * tau0 / dt;
				B[L.off[i] + (i - lo)] += tau0 - 0.5 * tau0 * tau0 / dt;
				double va = tau0 / dt;
				while (va < 1) {
					const double vb = std::min(1.0, 4 * va);
					for (std::size_t q = 0; q < gx.size(); ++q) {
						const double v = 0.5 * (va + vb) + 0.5 * (vb - va) * gx[q];
						const double w = 0.5 * (vb - va) * gw[q] * dt;
						const double tau = v * dt;
						const auto [blo, bhi] = hk.band(i, tau);
						const std::size_t l2 = std::max(blo, lo), h2 = std::min(bhi, hi);
						if (h2 <= l2) continue;
						// tau = t_k - s: the later level carries weight 1 - v, the earlier level v.
						row_.assign(h2 - l2 + 1, 0.0);
						hk.add_row(i, tau, l2, h2, row_.data(), 1.0);
						for (std::size_t c = 0; c < row_.size(); ++c) {
							A[L.off[i] + (l2 - lo) + c] += w * v * row_[c];
							B[L.off[i] + (l2 - lo) + c] += w * (1 - v) * row_[c];
						}
					}
					va = vb;
				}
			}
			L.S.assign(S.begin(), S.end());
			L.A.assign(A.begin(), A.end());
			L.B.assign(B.begin(), B.end());
		});
	}

	const SpaceTimeGrid& grid() const { return *g_; }

	// Duhamel integral of the level values F (levels x nodes, row-major); the first slab holds F(t_1) frozen.
	std::vector<double> apply(const std::vector<double>& F) const {
		const std::size_t M = g_->n_levels(), J = g_->n_nodes();
		std::vector<double> D(M * J, 0.0);
		for (std::size_t k = 0; k < M; ++k) {
			const Level& L = levels_[k];
			const double* Fk = F.data() + k * J;
			const double* Fp = k == 0 ? Fk : F.data() + (k - 1) * J;
			const double* Dp = k == 0 ? nullptr : D.data() + (k - 1) * J;
			double* Dk = D.data() + k * J;
			for (std::size_t i = 0; i < J; ++i) {
				const std::size_t lo = L.lo[i];
				double s = 0;
				for (std::size_t e = L.off[i]; e < L.off[i + 1]; ++e) {
					const std::size_t c = lo + (e - L.off[i]);
					s += static_cast<double>(L.A[e]) * Fp[c] + static_cast<double>(L.B[e]) * Fk[c];
					if (Dp) s += static_cast<double>(L.S[e]) * Dp[c];
				}
				Dk[i] = s;
			}
		}
		return D;
	}

	// Semigroup step of level k applied to nodal values at level k-1.
	double semigroup_row(std::size_t k, std::size_t i, const double* prev) const {
		const Level& L = levels_[k];
		double s = 0;
		for (std::size_t e = L.off[i]; e < L.off[i + 1]; ++e) s += static_cast<double>(L.S[e]) * prev[L.lo[i] + (e - L.off[i])];
		return s;
	}

	std::size_t stored_entries() const {
		std::size_t n = 0;
		for (const auto& L : levels_) n += L.A.size() + L.B.size() + L.S.size();
		return n;
	}

private:
	struct Level {
		std::vector<std::size_t> lo, off;
		std::vector<float> S, A, B;
	};
	std::shared_ptr<const SpaceTimeGrid> g_;
	std::vector<Level> levels_;
	static thread_local std::vector<double> row_;
};

inline thread_local std::vector<double> DuhamelOperator::row_;

// First Picard iterate u_1(x, t) = integral of K(x, y, t) dmu(y) at every node and level.
inline GridFunction apply_initial_kernel(const MeasureSpec& mu, std::shared_ptr<const SpaceTimeGrid> g, std::size_t threads = 1,
                                         double rel_tol = 1e-10) {
	GridFunction u(g);
	if (mu.is_zero()) return u;
	const Domain& d = g->domain();
	const auto& xs = g->nodes();
	const auto& ts = g->times();
	const std::size_t J = xs.size(), M = ts.size();
	double lo = d.last_lo(), hi = d.last_hi();
	const auto& in = mu.interior();
	if (in && in->support) {
		lo = std::max(lo, in->support->center[0] - in->support->radius);
		hi = std::min(hi, in->support->center[0] + in->support->radius);
	}
	if (in && !std::isfinite(hi)) throw InvalidArgument("interior density needs a bounded support");
	const auto hint = in ? detail::interior_hint(*in) : std::nullopt;
	detail::parallel_for(M * J, threads, [&](std::size_t idx) {
		const std::size_t k = idx / J, i = idx % J;
		if (g->is_boundary(i)) return;
		const Point x{xs[i]};
		const double t = ts[k];
		double v = 0;
		if (in && hi > lo) {
			const double w = 12 * std::sqrt(t);
			std::vector<double> br = in->breakpoints;
			for (double b : {xs[i] - w, xs[i] - w / 3, xs[i], xs[i] + w / 3, xs[i] + w}) br.push_back(b);
			auto f = [&](double y, double r) {
				const Point yp{y};
				const double rho = mu.interior_density(yp, r);
				if (rho == 0) return 0.0;
				if (in->mode == WeightMode::DistanceWeighted) return rho * heat_kernel(d, x, yp, t);
				return rho * k_kernel(d, x, yp, t);
			};
			const QuadResult q = detail::interval_integral(f, lo, hi, hint, QuadOptions::relative(rel_tol, 1e-300), br);
			require_converged(q, "initial kernel integral");
			v += q.value;
		}
		if (mu.boundary()) {
			for (double b : {0.0, d.kind() == DomainKind::Interval ? d.length() : -1.0}) {
				if (b < 0) continue;
				const double h = mu.boundary_density(Point{b});
				if (h > 0) v += h * k_kernel(d, x, Point{b}, t);
			}
		}
		for (const auto& a : mu.atoms()) v += mu.scale() * a.mass * k_kernel(d, x, a.at, t);
		u.at(k, i) = v;
	});
	return u;
}

enum class SolveStatus { Converged, Diverged, Inconclusive };

inline std::string to_string(SolveStatus s) {
	switch (s) {
	case SolveStatus::Converged: return "Converged";
	case SolveStatus::Diverged: return "Diverged";
	case SolveStatus::Inconclusive: return "Inconclusive";
	}
	return "?";
}

struct IterationRecord {
	double sup = 0;          // over nodes with d > 1e-3
	double weighted_l1 = 0;  // largest over levels of the integral of d u
	double sup_change = 0;   // sup |u_j - u_{j-1}|, same nodes
	double min_increment = 0;
};

struct PicardOptions {
	std::size_t max_iter = 400;
	double conv_tol = 1e-7;  // relative to the sup of the iterate
	double blowup_ceiling = 1e8;
	double coefficient = 1;  // multiplies u^p; 0 gives the linear problem
	double interior_cut = 1e-3;
};

struct SolveOutcome {
	SolveStatus status = SolveStatus::Inconclusive;
	std::size_t iterations = 0;
	GridFunction field;
	std::vector<IterationRecord> history;
	double p = 0;
	double coefficient = 1;
	bool monotone = true;
	std::string diagnostics;
};

// u_1 + coefficient * Duhamel(u_j^p). Throws on overflow in u^p.
inline GridFunction duhamel_step(const GridFunction& uj, const GridFunction& u1, double p, const DuhamelOperator& op,
                                 double coefficient = 1) {
	if (uj.values().size() != u1.values().size()) throw InvalidArgument("iterates live on different grids");
	const std::size_t J = uj.grid().n_nodes();
	std::vector<double> F(uj.values().size());
	for (std::size_t e = 0; e < F.size(); ++e) {
		const double v = uj.values()[e];
		if (v < 0) throw InvalidArgument("iterate must be nonnegative");
		F[e] = std::pow(v, p);
		if (!std::isfinite(F[e]))
			throw QuadratureFailure("overflow in u^p at level " + std::to_string(e / J) + ", node " + std::to_string(e % J), v, 0, 0);
	}
	GridFunction out = u1;
	if (coefficient == 0) return out;
	const std::vector<double> D = op.apply(F);
	for (std::size_t e = 0; e < D.size(); ++e) out.values()[e] += coefficient * D[e];
	return out;
}

// Operator and unit-scale first iterate for one grid and one measure; solves for any multiple kappa.
class PicardProblem {
public:
	PicardProblem(const MeasureSpec& mu, std::shared_ptr<const SpaceTimeGrid> g, std::size_t threads = 1)
		: mu_(mu), grid_(g), op_(g, threads), u1_(apply_initial_kernel(mu, g, threads)) {}

	const MeasureSpec& measure() const { return mu_; }

	const SpaceTimeGrid& grid() const { return *grid_; }
	std::shared_ptr<const SpaceTimeGrid> grid_ptr() const { return grid_; }
	const DuhamelOperator& op() const { return op_; }
	const GridFunction& unit_first_iterate() const { return u1_; }

	SolveOutcome solve(double p, double kappa, const PicardOptions& o = {}) const {
		if (!(p > 1)) throw InvalidArgument("p must exceed 1");
		if (o.max_iter < 2) throw InvalidArgument("max_iter must be at least 2");
		if (!(kappa >= 0)) throw InvalidArgument("kappa must be nonnegative");
		SolveOutcome out;
		out.p = p;
		out.coefficient = o.coefficient;
		GridFunction u1 = u1_;
		for (double& v : u1.values()) v *= kappa;
		const auto& ds = grid_->distances();
		const std::size_t J = grid_->n_nodes(), M = grid_->n_levels();
		auto measure = [&](const GridFunction& u, const GridFunction* prev) {
			IterationRecord r;
			r.min_increment = std::numeric_limits<double>::infinity();
			for (std::size_t k = 0; k < M; ++k) {
				for (std::size_t i = 0; i < J; ++i) {
					const double v = u.at(k, i);
					if (prev) r.min_increment = std::min(r.min_increment, v - prev->at(k, i));
					if (ds[i] <= o.interior_cut) continue;
					r.sup = std::max(r.sup, v);
					if (prev) r.sup_change = std::max(r.sup_change, std::abs(v - prev->at(k, i)));
				}
				r.weighted_l1 = std::max(r.weighted_l1, u.weighted_l1(k));
			}
			if (!prev) r.min_increment = 0;
			return r;
		};
		GridFunction u = u1;
		out.history.push_back(measure(u, nullptr));
		out.iterations = 1;
		if (out.history.back().sup == 0 && u.sup() == 0) {
			out.status = SolveStatus::Converged;
			out.field = u;
			return out;
		}
		for (std::size_t j = 2; j <= o.max_iter; ++j) {
			GridFunction next;
			try {
				next = duhamel_step(u, u1, p, op_, o.coefficient);
			} catch (const QuadratureFailure& e) {
				out.status = SolveStatus::Diverged;
				out.diagnostics = e.what();
				out.field = u;
				return out;
			}
			IterationRecord r = measure(next, &u);
			out.iterations = j;
			if (r.min_increment < -1e-12 * std::max(1.0, r.sup)) out.monotone = false;
			const double prev_sup = out.history.back().sup;
			out.history.push_back(r);
			u = std::move(next);
			if (!std::isfinite(r.sup) || r.sup > o.blowup_ceiling) {
				out.status = SolveStatus::Diverged;
				out.diagnostics = "sup exceeded the blow-up ceiling";
				break;
			}
			if (j > 3 && r.sup >= 2 * prev_sup) {
				out.status = SolveStatus::Diverged;
				out.diagnostics = "sup doubled between iterations";
				break;
			}
			if (r.sup_change <= o.conv_tol * r.sup) {
				out.status = SolveStatus::Converged;
				break;
			}
		}
		if (out.status == SolveStatus::Inconclusive) out.diagnostics = "iteration budget reached";
		out.field = std::move(u);
		return out;
	}

private:
	MeasureSpec mu_;
	std::shared_ptr<const SpaceTimeGrid> grid_;
	DuhamelOperator op_;
	GridFunction u1_;
};

inline SolveOutcome picard_solve(const MeasureSpec& mu, double p, const Domain& d, const GridParams& gp,
                                 const PicardOptions& o = {}, std::size_t threads = 1) {
	auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::build(d, mu, gp));
	return PicardProblem(mu, g, threads).solve(p, 1.0, o);
}

struct RestartPoint {
	double x = 0;
	double lhs = 0;
	double rhs = 0;
	double rel_residual = 0;
};

struct RestartReport {
	double t1 = 0, t2 = 0;
	double max_rel_residual = 0;
	std::vector<RestartPoint> points;
};

// Evaluates u(x, t2) = int G(x,y,t2-t1) u(y,t1) dy + int_t1^t2 int G(x,y,t2-s) u^p dy ds by direct quadrature
// of the stored field (linear in space, u^p linear in time), at interior check points.
// Check points are interior nodes carrying at least the fraction bulk of the largest value at t2.
inline RestartReport restart_residual(const SolveOutcome& run, std::size_t k1, std::size_t k2, std::size_t n_points = 10,
                                      double bulk = 1e-2, double tol = 1e-9) {
	if (run.status != SolveStatus::Converged) throw InvalidArgument("restart residual needs a converged solve");
	const GridFunction& u = run.field;
	const SpaceTimeGrid& g = u.grid();
	if (!(k1 < k2) || k2 >= g.n_levels()) throw InvalidArgument("need t1 < t2 on the grid");
	const Domain& d = g.domain();
	const auto& xs = g.nodes();
	const auto& ts = g.times();
	const double t1 = ts[k1], t2 = ts[k2];
	RestartReport rep{t1, t2, 0, {}};
	double top = 0;
	for (std::size_t i = 0; i < xs.size(); ++i)
		if (g.distances()[i] > 1e-3) top = std::max(top, u.at(k2, i));
	std::vector<std::size_t> cand;
	for (std::size_t i = 0; i < xs.size(); ++i)
		if (g.distances()[i] > 1e-3 && u.at(k2, i) >= bulk * top) cand.push_back(i);
	if (cand.empty()) return rep;
	const std::size_t n = std::min(n_points, cand.size());
	auto spatial = [&](double x, double tau, const std::function<double(double)>& f) {
		const double R = 13.5 * std::sqrt(tau);
		const double lo = std::max(xs.front(), x - R), hi = std::min(xs.back(), x + R);
		if (!(hi > lo)) return 0.0;
		std::vector<double> br{x};
		for (double y : xs)
			if (y > lo && y < hi) br.push_back(y);
		const QuadResult q =
		    integrate_line([&](double y) { return heat_kernel(d, Point{x}, Point{y}, tau) * f(y); }, lo, hi, QuadOptions::relative(tol, 1e-300), br);
		return q.value;
	};
	for (std::size_t m = 0; m < n; ++m) {
		const std::size_t i = cand[(m * (cand.size() - 1)) / std::max<std::size_t>(n - 1, 1)];
		const double x = xs[i];
		const double lin = spatial(x, t2 - t1, [&](double y) { return u.interpolate(k1, y); });
		double tail = 0;
		if (run.coefficient != 0) {
			for (std::size_t k = k1 + 1; k <= k2; ++k) {
				const double a = ts[k - 1], b = ts[k];
				auto Fs = [&](double y, double s) {
					const double w = (s - a) / (b - a);
					return (1 - w) * std::pow(u.interpolate(k - 1, y), run.p) + w * std::pow(u.interpolate(k, y), run.p);
				};
				auto inner = [&](double s) {
					if (t2 - s <= 0) return std::pow(u.interpolate(k2, x), run.p);
					return spatial(x, t2 - s, [&](double y) { return Fs(y, s); });
				};
				const QuadResult q = integrate_time(inner, TimeInterval{a, b, false, false}, QuadOptions::relative(1e-7, 1e-300));
				tail += q.value;
			}
		}
		RestartPoint pt{x, u.at(k2, i), lin + run.coefficient * tail, 0};
		pt.rel_residual = std::abs(pt.lhs - pt.rhs) / pt.lhs;
		rep.max_rel_residual = std::max(rep.max_rel_residual, pt.rel_residual);
		rep.points.push_back(pt);
	}
	return rep;
}

struct FdResolution {
	std::size_t intervals = 2000;
	double dt = 1e-5;
	double far = 0;  // right end on the half-line; 0 picks one from the data support
};

// Implicit finite differences for u_t = u_xx + coefficient u^p: backward Euler diffusion, explicit source,
// three-point Laplacian on a uniform grid, Dirichlet at both ends. Smooth bounded data only.
inline GridFunction fd_reference_solve(const MeasureSpec& mu, double p, const Domain& d, double T, const std::vector<double>& out_times,
                                       const FdResolution& res, double coefficient = 1) {
	detail::require_line_domain(d);
	if (!(T > 0) || res.intervals < 4 || !(res.dt > 0)) throw InvalidResolution("fd resolution must be positive");
	if (!mu.atoms().empty() || mu.boundary()) throw InvalidArgument("fd reference needs a bounded interior density");
	if (const auto& in = mu.interior(); in && in->singular) throw InvalidArgument("fd reference needs a bounded interior density");
	double X;
	if (d.kind() == DomainKind::Interval) {
		X = d.length();
	} else {
		X = res.far > 0 ? res.far : std::max(support_extent(mu, Point{0.0}), 1.0) + 12 * std::sqrt(T);
		if (!std::isfinite(X)) throw InvalidArgument("fd reference needs a bounded support");
	}
	const std::size_t n = res.intervals;
	const double h = X / static_cast<double>(n);
	std::vector<double> xs(n + 1);
	for (std::size_t i = 0; i <= n; ++i) xs[i] = h * static_cast<double>(i);
	std::vector<double> times = out_times;
	std::sort(times.begin(), times.end());
	auto grid = std::make_shared<const SpaceTimeGrid>(xs, times, T, d, 1);
	GridFunction out(grid);
	std::vector<double> u(n + 1, 0.0);
	for (std::size_t i = 1; i < n; ++i) {
		const Point y{xs[i]};
		// Lebesgue data rho dy starts from rho / d; distance-weighted data d rho dy starts from rho.
		double v = mu.interior_density(y);
		if (mu.interior() && mu.interior()->mode == WeightMode::Lebesgue) v /= d.distance(y);
		if (!std::isfinite(v)) throw InvalidArgument("fd reference needs a bounded density");
		u[i] = v;
	}
	// Thomas algorithm for (1 + 2r) u_i - r (u_{i-1} + u_{i+1}) = rhs_i.
	std::vector<double> cp(n + 1), dp(n + 1), rhs(n + 1);
	double t = 0;
	std::size_t next_out = 0;
	while (next_out < times.size()) {
		const double dt = std::min(res.dt, times[next_out] - t);
		const double r = dt / (h * h);
		double umax = 0;
		for (double v : u) umax = std::max(umax, v);
		if (coefficient != 0 && dt * coefficient * p * std::pow(umax, p - 1) > 0.5)
			throw InvalidResolution("time step violates the explicit source stability limit");
		for (std::size_t i = 1; i < n; ++i) rhs[i] = u[i] + dt * coefficient * std::pow(u[i], p);
		const double b = 1 + 2 * r, a = -r;
		cp[1] = a / b;
		dp[1] = rhs[1] / b;
		for (std::size_t i = 2; i < n; ++i) {
			const double m = b - a * cp[i - 1];
			cp[i] = a / m;
			dp[i] = (rhs[i] - a * dp[i - 1]) / m;
		}
		u[n - 1] = dp[n - 1];
		for (std::size_t i = n - 1; i-- > 1;) u[i] = dp[i] - cp[i] * u[i + 1];
		t += dt;
		while (next_out < times.size() && t >= times[next_out] * (1 - 1e-12)) {
			for (std::size_t i = 0; i <= n; ++i) out.at(next_out, i) = u[i];
			++next_out;
		}
	}
	return out;
}

} // namespace mildheat

#endif // MILDHEAT_SOLVER_HPP
