#ifndef MILDHEAT_CLI_RUN_HPP
#define MILDHEAT_CLI_RUN_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <boost/version.hpp>

#include "config.hpp"
#include "mildheat/kernel.hpp"
#include "mildheat/trace.hpp"
#include "output.hpp"

namespace mildheat::cli {

enum ExitCode : int { kOk = 0, kConfigInvalid = 1, kRunFailed = 2, kCheckFailed = 3 };

struct RunContext {
	std::filesystem::path out;
	std::ofstream manifest;
	std::ostream* log = nullptr;
	bool verbose = false;

	void record(const std::string& kind, Json body) {
		Json line;
		line["schema_version"] = kSchemaVersion;
		line["record"] = kind;
		for (auto& [k, v] : body.items()) line[k] = v;
		manifest << line.dump() << '\n';
		manifest.flush();
	}
	void say(const std::string& msg) {
		if (verbose && log) *log << msg << '\n';
	}
};

namespace detail {

struct Sampler {
	std::mt19937_64 rng;
	explicit Sampler(std::uint64_t seed) : rng(seed) {}
	double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
	Point point(const Domain& d) {
		Point p(d.dim());
		for (std::size_t i = 0; i < d.dim(); ++i) p[i] = uniform(-1.5, 1.5);
		if (d.kind() == DomainKind::HalfSpace) p.last() = uniform(0.0, 2.0);
		if (d.kind() == DomainKind::Interval) p[0] = uniform(0.0, d.length());
		return p;
	}
};

inline std::vector<double> sigma_sweep(const RunConfig& c, const std::vector<double>& fallback) {
	if (c.sigma_lo > 0) return geometric_sweep(c.sigma_lo, c.sigma_hi, c.sigma_n);
	return fallback;
}

inline Json outcome_json(const SolveOutcome& out) {
	const auto& g = out.field.grid();
	return Json{{"status", to_string(out.status)},
	            {"iterations", out.iterations},
	            {"sup", num(out.history.empty() ? 0.0 : out.history.back().sup)},
	            {"monotone", out.monotone},
	            {"diagnostics", out.diagnostics},
	            {"grid", grid_id(g)},
	            {"nodes", g.n_nodes()},
	            {"levels", g.n_levels()}};
}

inline int kernel_check(const RunConfig& c, const Domain& d, RunContext& ctx) {
	Sampler s(c.seed);
	CsvWriter w(ctx.out / "kernel_check.csv",
	            {"index", "x", "y", "t", "s", "symmetry_rel", "boundary_zero", "g_semigroup_rel", "k_semigroup_rel"});
	double sym = 0, gres = 0, kres = 0;
	bool zeros = true;
	for (std::size_t i = 0; i < c.kernel_samples; ++i) {
		const Point x = s.point(d), y0 = s.point(d);
		const double t = std::exp(s.uniform(std::log(0.02), std::log(0.3))), u = std::exp(s.uniform(std::log(0.02), std::log(0.3)));
		const double a = heat_kernel(d, x, y0, t), b = heat_kernel(d, y0, x, t);
		const double srel = std::max(a, b) > 0 ? std::abs(a - b) / std::max(a, b) : 0.0;
		bool zero = true;
		if (d.has_boundary()) {
			const Point xb = d.project_to_boundary(x);
			zero = heat_kernel(d, xb, y0, t) == 0 && heat_kernel(d, y0, xb, t) == 0 && k_kernel(d, xb, y0, t) == 0;
		}
		const double g = verify_semigroup(d, x, y0, t, u, 0.1 * c.g_semigroup_tol).rel_residual;
		double k = std::nan("");
		if (d.has_boundary()) {
			const Point y = i % 2 == 0 ? d.project_to_boundary(y0) : y0;
			k = verify_semigroup(d, x, y, t, u, 0.1 * c.k_semigroup_tol, KernelIdentity::K).rel_residual;
			kres = std::max(kres, k);
		}
		sym = std::max(sym, srel);
		gres = std::max(gres, g);
		zeros = zeros && zero;
		w.row_strings({std::to_string(i), point_cell(x), point_cell(y0), fmt(t), fmt(u), fmt(srel), zero ? "1" : "0", fmt(g), fmt(k)});
	}
	Json res{{"domain", d.describe()},
	         {"samples", c.kernel_samples},
	         {"max_symmetry_rel", num(sym)},
	         {"boundary_zero", zeros},
	         {"max_g_semigroup_rel", num(gres)},
	         {"max_k_semigroup_rel", d.has_boundary() ? num(kres) : Json(nullptr)}};
	if (d.kind() == DomainKind::HalfSpace) {
		Point x(d.dim());
		x.last() = 1;
		res["survival_mass_x1_t025"] = num(survival_mass(d, x, 0.25));
	}
	const bool pass = sym <= c.symmetry_tol && zeros && gres <= c.g_semigroup_tol && (!d.has_boundary() || kres <= c.k_semigroup_tol);
	res["pass"] = pass;
	ctx.record("result", res);
	return pass ? kOk : kCheckFailed;
}

inline std::shared_ptr<const SpaceTimeGrid> build_grid(const RunConfig& c, const Domain& d, const MeasureSpec& mu) {
	GridParams gp = c.grid;
	gp.T = c.T;
	return std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::build(d, mu, gp));
}

inline PicardOptions picard_options(const RunConfig& c) { return c.picard; }

inline void write_history(const std::filesystem::path& path, const SolveOutcome& out) {
	CsvWriter w(path, {"iteration", "sup", "weighted_l1", "sup_change", "min_increment"});
	for (std::size_t j = 0; j < out.history.size(); ++j) {
		const auto& h = out.history[j];
		w.row_strings({std::to_string(j + 1), fmt(h.sup), fmt(h.weighted_l1), fmt(h.sup_change), fmt(h.min_increment)});
	}
}

inline void write_field(const std::filesystem::path& path, const GridFunction& u) {
	CsvWriter w(path, {"t", "x", "u"});
	const auto& g = u.grid();
	for (std::size_t k = 0; k < g.n_levels(); ++k)
		for (std::size_t i = 0; i < g.n_nodes(); ++i) w.row_strings({fmt(g.times()[k]), fmt(g.nodes()[i]), fmt(u.at(k, i))});
}

inline SolveOutcome solve_configured(const RunConfig& c, const Domain& d, const MeasureSpec& mu, RunContext& ctx) {
	const auto g = build_grid(c, d, mu);
	ctx.say("grid " + grid_id(*g));
	const PicardProblem pb(mu, g, c.threads);
	SolveOutcome out = pb.solve(c.p, 1.0, picard_options(c));
	ctx.say("solve " + to_string(out.status) + " after " + std::to_string(out.iterations) + " iterations");
	return out;
}

inline int solve(const RunConfig& c, const Domain& d, const MeasureSpec& mu, RunContext& ctx) {
	const SolveOutcome out = solve_configured(c, d, mu, ctx);
	write_history(ctx.out / "solve_history.csv", out);
	write_field(ctx.out / "solution.csv", out.field);
	Json res = outcome_json(out);
	if (out.status == SolveStatus::Converged && out.field.grid().n_levels() >= 3 && !mu.is_zero()) {
		const std::size_t K = out.field.grid().n_levels() - 1;
		const RestartReport r = restart_residual(out, K / 2, K);
		res["restart_residual"] = num(r.max_rel_residual);
	}
	ctx.record("result", res);
	return kOk;
}

inline std::vector<TestFunction> trace_functions(const RunConfig& c, const MeasureSpec& mu) {
	std::vector<TestFunction> out;
	for (std::size_t i = 0; i < c.trace_centers.size(); ++i) out.push_back(TestFunction::bump(Point{c.trace_centers[i]}, c.trace_radii[i]));
	if (out.empty()) {
		const double a = c.measure.anchor.empty() ? 1.0 : c.measure.anchor[0];
		out.push_back(TestFunction::bump(Point{std::max(a, 0.5)}, 0.5));
	}
	(void)mu;
	return out;
}

inline int trace(const RunConfig& c, const Domain& d, const MeasureSpec& mu, RunContext& ctx) {
	const SolveOutcome out = solve_configured(c, d, mu, ctx);
	Json res = outcome_json(out);
	if (out.status != SolveStatus::Converged) {
		res["error"] = "trace recovery needs a converged solve";
		ctx.record("result", res);
		return kRunFailed;
	}
	const auto levels = earliest_levels(out.field.grid());
	CsvWriter w(ctx.out / "trace.csv", {"index", "center", "radius", "t", "pairing"});
	CsvWriter sw(ctx.out / "trace_summary.csv", {"index", "center", "radius", "limit", "error", "reference", "inconclusive"});
	Json rows = Json::array();
	const auto fns = trace_functions(c, mu);
	for (std::size_t i = 0; i < fns.size(); ++i) {
		const TestFunction& psi = fns[i];
		const TraceEstimate e = recover_trace(out.field, psi, levels);
		const double ref = integrate_measure(mu, d, psi.center, psi.radius, psi.f, measure_tolerance(c.quad_rel)).value;
		for (std::size_t k = 0; k < e.times.size(); ++k)
			w.row_strings({std::to_string(i), point_cell(psi.center), fmt(psi.radius), fmt(e.times[k]), fmt(e.pairings[k])});
		sw.row_strings({std::to_string(i), point_cell(psi.center), fmt(psi.radius), fmt(e.limit), fmt(e.error), fmt(ref), e.inconclusive ? "1" : "0"});
		rows.push_back({{"center", to_json(psi.center)},
		                {"radius", psi.radius},
		                {"limit", num(e.limit)},
		                {"error", num(e.error)},
		                {"reference", num(ref)},
		                {"within", std::abs(e.limit - ref) <= std::max(0.02 * std::abs(ref), e.error)}});
	}
	res["traces"] = rows;
	ctx.record("result", res);
	return kOk;
}

inline CriterionReport run_criterion(const std::string& id, const RunConfig& c, const Domain& d, const MeasureSpec& mu, RunContext& ctx) {
	const QuadOptions o = measure_tolerance(c.quad_rel);
	const auto zs = sample_lattice(mu, d, c.T);
	const auto sig = sigma_sweep(c, default_sigmas(c.T));
	if (id == "thm12_ball_bound") return thm12_ball_bound(mu, d, c.p, c.T, zs, sig, o);
	if (id == "thm12_log_bounds") {
		const LogVariant v = c.log_variant == "pN_interior" ? LogVariant::PNInterior : LogVariant::PN1Boundary;
		std::vector<Point> use = zs;
		if (v == LogVariant::PN1Boundary) std::erase_if(use, [&](const Point& z) { return !d.on_boundary(z); });
		return thm12_log_bounds(mu, d, c.T, v, use, sig, o);
	}
	if (id == "boundary_mass") return boundary_mass_check(mu, d, c.p, 1e3, o);
	if (id == "cond_1_16") {
		const Point base = zs.empty() ? Point(d.dim()) : zs.front();
		return cond_1_16(mu, d, normal_ladder(d, base, 1024), o);
	}
	if (id == "sufficient_5_7") return sufficient_5_7(mu, d, c.p, c.T, zs, 40, 1e-8, o);
	if (id == "prop52_moments") {
		const MomentReports r = prop52_moments(mu, d, c.alpha, c.p, c.T, zs, sig, o);
		ctx.record("report", report_json(r.boundary));
		write_report_csv(ctx.out / ("criteria_" + r.boundary.id + ".csv"), r.boundary);
		return r.interior;
	}
	if (id == "prop53_orlicz") return prop53_orlicz(mu, d, c.beta, c.p, c.ell, c.T, zs, sigma_sweep(c, orlicz_sigmas()), o);
	if (id == "prop54_orlicz_boundary") return prop54_orlicz_boundary(mu, d, c.beta, c.T, zs, sigma_sweep(c, orlicz_sigmas()), o);
	if (id == "thm13_weighted") {
		const auto strip_sig = sigma_sweep(c, geometric_sweep(1e-3, std::min(0.2 * std::sqrt(c.T), 0.5 * d.length()), 10));
		if (c.strip_source == "trace") {
			const SolveOutcome out = solve_configured(c, d, mu, ctx);
			if (out.status != SolveStatus::Converged) throw InvalidArgument("strip traces need a converged solve");
			return thm13_weighted(trace_strips(out.field, strip_sig), c.p, c.T, d);
		}
		return thm13_weighted(measure_strips(mu, d, strip_sig), c.p, c.T, d);
	}
	throw InvalidArgument("unknown criterion " + id);
}

inline int criteria(const RunConfig& c, const Domain& d, const MeasureSpec& mu, RunContext& ctx) {
	int code = kOk;
	for (const auto& id : c.criteria) {
		ctx.say("criterion " + id);
		try {
			const CriterionReport r = run_criterion(id, c, d, mu, ctx);
			ctx.record("report", report_json(r));
			write_report_csv(ctx.out / ("criteria_" + r.id + ".csv"), r);
		} catch (const Error& e) {
			ctx.record("report", Json{{"id", id}, {"error", e.what()}});
			code = kRunFailed;
		}
	}
	return code;
}

inline Json dichotomy_json(const DichotomyResult& r) {
	Json h = Json::array();
	for (const auto& s : r.history)
		h.push_back({{"kappa", num(s.kappa)}, {"status", to_string(s.status)}, {"iterations", s.iterations}, {"phase", s.phase}});
	return Json{{"family", r.family},
	            {"z", to_json(r.z)},
	            {"p", r.p},
	            {"kappa_low", num(r.kappa_low)},
	            {"kappa_high", num(r.kappa_high)},
	            {"ratio", num(r.kappa_high / r.kappa_low)},
	            {"grid", r.grid_id},
	            {"history", h}};
}

inline int dichotomy(const RunConfig& c, const Domain& d, RunContext& ctx) {
	const MeasureSpec unit = make_measure(c, d, true);
	DichotomyOptions o = c.dichotomy;
	o.picard = picard_options(c);
	CsvWriter w(ctx.out / "dichotomy.csv", {"grid", "phase", "kappa", "status", "iterations", "sup"});
	auto sweep_on = [&](const GridParams& gp, const DichotomyOptions& opts) {
		RunConfig cc = c;
		cc.grid = gp;
		const PicardProblem pb(unit, build_grid(cc, d, unit), c.threads);
		ctx.say("dichotomy on " + grid_id(pb.grid()));
		const DichotomyResult r = dichotomy_sweep(pb, c.p, opts);
		for (const auto& s : r.history)
			w.row_strings({r.grid_id, s.phase, fmt(s.kappa), to_string(s.status), std::to_string(s.iterations), fmt(s.sup)});
		return r;
	};
	const DichotomyResult base = sweep_on(c.grid, o);
	Json res = dichotomy_json(base);
	if (c.refine_check) {
		DichotomyOptions ro = o;
		ro.kappa_lo = base.kappa_low / 2;
		ro.kappa_hi = base.kappa_high * 2;
		const DichotomyResult fine = sweep_on(c.grid.refined(), ro);
		res["refined"] = dichotomy_json(fine);
		res["shift_low"] = num(std::abs(fine.kappa_low / base.kappa_low - 1));
		res["shift_high"] = num(std::abs(fine.kappa_high / base.kappa_high - 1));
	}
	ctx.record("result", res);
	return kOk;
}

} // namespace detail

// Executes the configured command, writing manifest.jsonl and the command's CSV files into out.
inline int run(const RunConfig& c, const std::filesystem::path& out, std::ostream& log, bool verbose = false) {
	const auto problems = validate(c);
	if (!problems.empty()) {
		for (const auto& p : problems) log << "config: " << p << '\n';
		return kConfigInvalid;
	}
	std::filesystem::create_directories(out);
	RunContext ctx;
	ctx.out = out;
	ctx.manifest.open(out / "manifest.jsonl");
	ctx.log = &log;
	ctx.verbose = verbose;
	if (!ctx.manifest) {
		log << "cannot open " << (out / "manifest.jsonl").string() << '\n';
		return kRunFailed;
	}
	ctx.record("config", Json{{"config", config_echo(c)}});
	ctx.record("environment", Json{{"mildheat", kVersion}, {"compiler", __VERSION__}, {"boost", BOOST_LIB_VERSION}});
	const auto t0 = std::chrono::steady_clock::now();
	int code = kOk;
	try {
		const Domain d = make_domain(c);
		const MeasureSpec mu = make_measure(c, d);
		if (c.command == "kernel-check")
			code = detail::kernel_check(c, d, ctx);
		else if (c.command == "solve")
			code = detail::solve(c, d, mu, ctx);
		else if (c.command == "trace")
			code = detail::trace(c, d, mu, ctx);
		else if (c.command == "criteria")
			code = detail::criteria(c, d, mu, ctx);
		else
			code = detail::dichotomy(c, d, ctx);
	} catch (const Error& e) {
		ctx.record("error", Json{{"message", e.what()}});
		log << "error: " << e.what() << '\n';
		code = kRunFailed;
	}
	const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	ctx.record("timing", Json{{"seconds", secs}, {"exit_code", code}});
	return code;
}

} // namespace mildheat::cli

#endif // MILDHEAT_CLI_RUN_HPP
