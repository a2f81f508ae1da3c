#ifndef MILDHEAT_CLI_CONFIG_HPP
#define MILDHEAT_CLI_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mildheat/criteria.hpp"
#include "mildheat/dichotomy.hpp"

namespace mildheat::cli {

inline const std::vector<std::string> kCommands{"kernel-check", "solve", "trace", "criteria", "dichotomy"};
inline const std::vector<std::string> kCriteria{"thm12_ball_bound", "thm12_log_bounds", "boundary_mass", "cond_1_16", "sufficient_5_7",
                                                "prop52_moments",   "prop53_orlicz",    "prop54_orlicz_boundary", "thm13_weighted"};

struct MeasureConfig {
	std::string type = "zero";  // zero, family, atom, bump, power
	std::string family = "mu1";
	std::vector<double> anchor;  // family anchor, atom position, bump centre or power anchor
	double kappa = 1;
	double mass = 1;
	double radius = 0.5;
	double amplitude = 1;
	std::string mode = "distance";  // distance (against d dy) or lebesgue
	double exponent = 0;
	double log_power = 0;
	bool on_boundary = false;
};

struct RunConfig {
	std::string command = "solve";
	std::string domain = "half_space";
	std::size_t dim = 1;
	double length = 1;
	MeasureConfig measure;
	double p = 2;
	double T = 1;
	GridParams grid;
	PicardOptions picard;
	double quad_rel = 1e-9;
	std::uint64_t seed = 1;
	std::size_t threads = 1;
	// kernel-check
	std::size_t kernel_samples = 50;
	double symmetry_tol = 1e-12;
	double g_semigroup_tol = 1e-6;
	double k_semigroup_tol = 1e-5;
	// trace
	std::vector<double> trace_centers;
	std::vector<double> trace_radii;
	// criteria
	std::vector<std::string> criteria = {"thm12_ball_bound"};
	double sigma_lo = 0;  // 0 selects the default sweep
	double sigma_hi = 0;
	std::size_t sigma_n = 12;
	double alpha = 1.1;
	double beta = 0.3;
	int ell = 0;
	std::string log_variant = "pN_interior";
	std::string strip_source = "measure";  // measure or trace
	// dichotomy
	DichotomyOptions dichotomy;
	bool refine_check = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
	const auto a = s.find_first_not_of(" \t\r\n"), b = s.find_last_not_of(" \t\r\n");
	return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s) {
	std::vector<std::string> out;
	std::stringstream ss(s);
	std::string item;
	while (std::getline(ss, item, ','))
		if (!trim(item).empty()) out.push_back(trim(item));
	return out;
}

// Reads typed fields out of the tree, collecting every problem instead of stopping at the first.
class Reader {
public:
	explicit Reader(const boost::property_tree::ptree& pt) : pt_(pt) {}

	void text(const std::string& key, std::string& v) {
		if (auto s = raw(key)) v = *s;
	}
	void number(const std::string& key, double& v) {
		if (auto s = raw(key)) {
			try {
				v = parse_number(*s);
			} catch (const InvalidArgument&) {
				problems.push_back(key + ": not a number '" + *s + "'");
			}
		}
	}
	template <class I>
	void integer(const std::string& key, I& v) {
		if (auto s = raw(key)) {
			double d = 0;
			try {
				d = parse_number(*s);
			} catch (const InvalidArgument&) {
				problems.push_back(key + ": not a number '" + *s + "'");
				return;
			}
			if (d < 0 || d != std::floor(d) || d > 1e15)
				problems.push_back(key + ": not a nonnegative integer '" + *s + "'");
			else
				v = static_cast<I>(d);
		}
	}
	void flag(const std::string& key, bool& v) {
		if (auto s = raw(key)) {
			if (*s == "true" || *s == "1" || *s == "yes")
				v = true;
			else if (*s == "false" || *s == "0" || *s == "no")
				v = false;
			else
				problems.push_back(key + ": not a boolean '" + *s + "'");
		}
	}
	void numbers(const std::string& key, std::vector<double>& v) {
		if (auto s = raw(key)) {
			v.clear();
			for (const auto& item : split(*s)) {
				try {
					v.push_back(parse_number(item));
				} catch (const InvalidArgument&) {
					problems.push_back(key + ": not a number '" + item + "'");
				}
			}
		}
	}
	void words(const std::string& key, std::vector<std::string>& v) {
		if (auto s = raw(key)) v = split(*s);
	}

	// Keys present in the file but never read.
	std::vector<std::string> unknown() const {
		std::vector<std::string> out;
		for (const auto& [section, body] : pt_)
			for (const auto& [key, value] : body) {
				const std::string full = section + "." + key;
				if (!seen_.count(full)) out.push_back(full + ": unknown key");
			}
		return out;
	}

	std::vector<std::string> problems;

private:
	std::optional<std::string> raw(const std::string& key) {
		seen_.insert(key);
		const auto v = pt_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
		if (!v) return std::nullopt;
		return trim(*v);
	}
	const boost::property_tree::ptree& pt_;
	std::set<std::string> seen_;
};

inline bool one_of(const std::string& v, const std::vector<std::string>& allowed) {
	return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

} // namespace detail

inline Domain make_domain(const RunConfig& c) {
	if (c.domain == "half_space") return Domain::half_space(c.dim);
	if (c.domain == "whole_space") return Domain::whole_space(c.dim);
	if (c.domain == "interval") return Domain::interval(c.length);
	throw ConfigError({"domain.kind: unknown domain '" + c.domain + "'"});
}

inline Point to_point(const std::vector<double>& v) {
	Point p(v.size());
	for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
	return p;
}

inline FamilyId family_id(const std::string& s) {
	if (s == "mu1") return FamilyId::Mu1;
	if (s == "mu2") return FamilyId::Mu2;
	if (s == "mu3") return FamilyId::Mu3;
	throw ConfigError({"measure.family: unknown family '" + s + "'"});
}

// Measure at the configured scale; unit_scale drops kappa (used by the dichotomy sweep).
inline MeasureSpec make_measure(const RunConfig& c, const Domain& d, bool unit_scale = false) {
	const MeasureConfig& m = c.measure;
	const double kappa = unit_scale ? 1.0 : m.kappa;
	const WeightMode mode = m.mode == "lebesgue" ? WeightMode::Lebesgue : WeightMode::DistanceWeighted;
	if (m.type == "zero") return MeasureSpec{};
	const Point a = to_point(m.anchor);
	if (m.type == "family") return make_family({family_id(m.family), a, c.p, kappa}, d);
	if (m.type == "atom") {
		MeasureSpec mu;
		mu.add_atom(a, m.mass);
		return mu.scaled(kappa);
	}
	if (m.type == "bump") return make_bump(a, m.radius, m.amplitude, mode).scaled(kappa);
	if (m.type == "power") return make_power_density(a, RadialProfile{m.exponent, m.log_power}, m.on_boundary, d).scaled(kappa);
	throw ConfigError({"measure.type: unknown measure type '" + m.type + "'"});
}

// Checks every field and returns all violations.
inline std::vector<std::string> validate(const RunConfig& c) {
	std::vector<std::string> v;
	auto need = [&](bool ok, const std::string& msg) {
		if (!ok) v.push_back(msg);
	};
	need(detail::one_of(c.command, kCommands), "run.command: unknown command '" + c.command + "'");
	need(detail::one_of(c.domain, {"half_space", "whole_space", "interval"}), "domain.kind: unknown domain '" + c.domain + "'");
	need(c.dim >= 1 && c.dim <= kMaxDim, "domain.dim: must lie in [1, 3]");
	need(c.domain != "interval" || c.dim == 1, "domain.dim: an interval is one-dimensional");
	need(c.length > 0 && std::isfinite(c.length), "domain.length: must be positive");
	need(c.p > 1 && std::isfinite(c.p), "problem.p: must exceed 1");
	need(c.T > 0 && std::isfinite(c.T), "problem.T: must be positive");
	need(c.grid.theta > 0 && c.grid.theta < 1, "grid.theta: must lie in (0, 1)");
	need(c.grid.time_ratio > 1, "grid.time_ratio: must exceed 1");
	need(c.grid.h_min > 0, "grid.h_min: must be positive");
	need(c.grid.h_max >= c.grid.h_min, "grid.h_max: must be at least h_min");
	need(c.grid.grading > 0, "grid.grading: must be positive");
	need(c.grid.far >= 0, "grid.far: must be nonnegative");
	need(c.picard.conv_tol > 0, "tolerance.conv_tol: must be positive");
	need(c.picard.max_iter >= 2, "tolerance.max_iter: must be at least 2");
	need(c.picard.blowup_ceiling > 0, "tolerance.blowup_ceiling: must be positive");
	need(c.picard.coefficient >= 0, "tolerance.coefficient: must be nonnegative");
	need(c.quad_rel > 0 && c.quad_rel < 1, "tolerance.quad_rel: must lie in (0, 1)");
	need(c.threads >= 1, "run.threads: must be at least 1");
	need(c.kernel_samples >= 1, "kernel.samples: must be at least 1");
	need(c.symmetry_tol > 0 && c.g_semigroup_tol > 0 && c.k_semigroup_tol > 0, "kernel tolerances: must be positive");
	need(c.trace_centers.size() == c.trace_radii.size(), "trace.centers: needs one radius per centre");
	for (double r : c.trace_radii) need(r > 0, "trace.radii: must be positive");
	for (const auto& id : c.criteria) need(detail::one_of(id, kCriteria), "criteria.ids: unknown criterion '" + id + "'");
	need(c.sigma_lo >= 0 && c.sigma_hi >= 0, "criteria.sigma_lo: sigma range must be nonnegative");
	need((c.sigma_lo == 0 && c.sigma_hi == 0) || c.sigma_hi > c.sigma_lo, "criteria.sigma_hi: must exceed sigma_lo");
	need(c.sigma_n >= 2, "criteria.sigma_n: must be at least 2");
	need(c.alpha > 1, "criteria.alpha: must exceed 1");
	need(c.beta > 0, "criteria.beta: must be positive");
	need(c.ell == 0 || c.ell == 1, "criteria.ell: must be 0 or 1");
	need(detail::one_of(c.log_variant, {"pN_interior", "pN1_boundary"}), "criteria.log_variant: unknown variant '" + c.log_variant + "'");
	need(detail::one_of(c.strip_source, {"measure", "trace"}), "criteria.strip_source: must be measure or trace");
	need(c.dichotomy.kappa_lo > 0 && c.dichotomy.kappa_hi > c.dichotomy.kappa_lo, "dichotomy.kappa_lo: bracket needs 0 < kappa_lo < kappa_hi");
	need(c.dichotomy.target_ratio > 1, "dichotomy.ratio: must exceed 1");
	const MeasureConfig& m = c.measure;
	need(detail::one_of(m.type, {"zero", "family", "atom", "bump", "power"}), "measure.type: unknown measure type '" + m.type + "'");
	need(detail::one_of(m.mode, {"distance", "lebesgue"}), "measure.mode: must be distance or lebesgue");
	need(m.kappa >= 0 && std::isfinite(m.kappa), "measure.kappa: must be nonnegative");
	if (m.type != "zero") need(m.anchor.size() == c.dim, "measure.anchor: needs one coordinate per dimension");
	if (m.type == "atom") need(m.mass > 0, "measure.mass: must be positive");
	if (m.type == "bump") need(m.radius > 0 && m.amplitude >= 0, "measure.radius: bump needs a positive radius and nonnegative amplitude");
	if (m.type == "family") need(detail::one_of(m.family, {"mu1", "mu2", "mu3"}), "measure.family: unknown family '" + m.family + "'");
	if (c.command == "dichotomy") need(m.type == "family", "measure.type: the dichotomy sweep needs a family");
	// Constraints that need the objects themselves, only when the simple fields are sound.
	if (v.empty()) {
		try {
			const Domain d = make_domain(c);
			const MeasureSpec mu = make_measure(c, d);
			if (m.type != "zero") need(d.contains(to_point(m.anchor)), "measure.anchor: outside the domain");
		} catch (const Error& e) {
			v.push_back(std::string("measure: ") + e.what());
		}
	}
	return v;
}

// INI text with sections run, domain, measure, problem, grid, tolerance, kernel, trace, criteria, dichotomy.
inline RunConfig parse_config(std::istream& in) {
	boost::property_tree::ptree pt;
	try {
		boost::property_tree::ini_parser::read_ini(in, pt);
	} catch (const boost::property_tree::ini_parser_error& e) {
		throw ConfigError({std::string("syntax: ") + e.message() + " at line " + std::to_string(e.line())});
	}
	RunConfig c;
	detail::Reader r(pt);
	r.text("run.command", c.command);
	r.integer("run.seed", c.seed);
	r.integer("run.threads", c.threads);
	r.text("domain.kind", c.domain);
	r.integer("domain.dim", c.dim);
	r.number("domain.length", c.length);
	r.text("measure.type", c.measure.type);
	r.text("measure.family", c.measure.family);
	r.numbers("measure.anchor", c.measure.anchor);
	r.number("measure.kappa", c.measure.kappa);
	r.number("measure.mass", c.measure.mass);
	r.number("measure.radius", c.measure.radius);
	r.number("measure.amplitude", c.measure.amplitude);
	r.text("measure.mode", c.measure.mode);
	r.number("measure.exponent", c.measure.exponent);
	r.number("measure.log_power", c.measure.log_power);
	r.flag("measure.on_boundary", c.measure.on_boundary);
	r.number("problem.p", c.p);
	r.number("problem.T", c.T);
	r.number("grid.theta", c.grid.theta);
	r.number("grid.time_ratio", c.grid.time_ratio);
	r.number("grid.h_min", c.grid.h_min);
	r.number("grid.h_max", c.grid.h_max);
	r.number("grid.grading", c.grid.grading);
	r.number("grid.far", c.grid.far);
	r.numbers("grid.extra_times", c.grid.extra_times);
	r.number("tolerance.conv_tol", c.picard.conv_tol);
	r.integer("tolerance.max_iter", c.picard.max_iter);
	r.number("tolerance.blowup_ceiling", c.picard.blowup_ceiling);
	r.number("tolerance.coefficient", c.picard.coefficient);
	r.number("tolerance.quad_rel", c.quad_rel);
	r.integer("kernel.samples", c.kernel_samples);
	r.number("kernel.symmetry_tol", c.symmetry_tol);
	r.number("kernel.g_semigroup_tol", c.g_semigroup_tol);
	r.number("kernel.k_semigroup_tol", c.k_semigroup_tol);
	r.numbers("trace.centers", c.trace_centers);
	r.numbers("trace.radii", c.trace_radii);
	r.words("criteria.ids", c.criteria);
	r.number("criteria.sigma_lo", c.sigma_lo);
	r.number("criteria.sigma_hi", c.sigma_hi);
	r.integer("criteria.sigma_n", c.sigma_n);
	r.number("criteria.alpha", c.alpha);
	r.number("criteria.beta", c.beta);
	double ell = c.ell;
	r.number("criteria.ell", ell);
	c.ell = static_cast<int>(ell);
	if (ell != c.ell) r.problems.push_back("criteria.ell: must be 0 or 1");
	r.text("criteria.log_variant", c.log_variant);
	r.text("criteria.strip_source", c.strip_source);
	r.number("dichotomy.kappa_lo", c.dichotomy.kappa_lo);
	r.number("dichotomy.kappa_hi", c.dichotomy.kappa_hi);
	r.integer("dichotomy.max_bisection", c.dichotomy.max_bisection);
	r.integer("dichotomy.max_widen", c.dichotomy.max_widen);
	r.number("dichotomy.ratio", c.dichotomy.target_ratio);
	r.flag("dichotomy.refine_check", c.refine_check);
	std::vector<std::string> problems = r.problems;
	for (const auto& u : r.unknown()) problems.push_back(u);
	c.dichotomy.picard = c.picard;
	c.grid.T = c.T;
	if (!problems.empty()) throw ConfigError(problems);
	return c;
}

inline RunConfig parse_config_text(const std::string& text) {
	std::istringstream in(text);
	return parse_config(in);
}

} // namespace mildheat::cli

#endif // MILDHEAT_CLI_CONFIG_HPP
