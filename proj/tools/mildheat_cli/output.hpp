#ifndef MILDHEAT_CLI_OUTPUT_HPP
#define MILDHEAT_CLI_OUTPUT_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace mildheat::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form; fixed so CSV bytes are stable across runs.
inline std::string fmt(double v) {
	if (std::isnan(v)) return "nan";
	if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(fmt(v)); }

inline Json to_json(const Point& p) {
	Json a = Json::array();
	for (std::size_t i = 0; i < p.dim(); ++i) a.push_back(num(p[i]));
	return a;
}

class CsvWriter {
public:
	CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
		if (!out_) throw Error("cannot open " + path.string());
		row_strings(header);
	}
	void row_strings(const std::vector<std::string>& cells) {
		for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
		out_ << '\n';
	}

private:
	std::ofstream out_;
};

inline std::string point_cell(const Point& p) {
	std::string s;
	for (std::size_t i = 0; i < p.dim(); ++i) s += (i ? " " : "") + fmt(p[i]);
	return s;
}

inline Json config_echo(const RunConfig& c) {
	Json j;
	j["command"] = c.command;
	j["seed"] = c.seed;
	j["threads"] = c.threads;
	j["domain"] = {{"kind", c.domain}, {"dim", c.dim}, {"length", c.length}};
	const auto& m = c.measure;
	j["measure"] = {{"type", m.type},         {"family", m.family},       {"anchor", m.anchor},       {"kappa", m.kappa},
	                {"mass", m.mass},         {"radius", m.radius},       {"amplitude", m.amplitude}, {"mode", m.mode},
	                {"exponent", m.exponent}, {"log_power", m.log_power}, {"on_boundary", m.on_boundary}};
	j["problem"] = {{"p", c.p}, {"T", c.T}};
	j["grid"] = {{"theta", c.grid.theta}, {"time_ratio", c.grid.time_ratio}, {"h_min", c.grid.h_min}, {"h_max", c.grid.h_max},
	             {"grading", c.grid.grading}, {"far", c.grid.far}, {"extra_times", c.grid.extra_times}};
	j["tolerance"] = {{"conv_tol", c.picard.conv_tol},
	                  {"max_iter", c.picard.max_iter},
	                  {"blowup_ceiling", c.picard.blowup_ceiling},
	                  {"coefficient", c.picard.coefficient},
	                  {"quad_rel", c.quad_rel}};
	j["kernel"] = {{"samples", c.kernel_samples},
	               {"symmetry_tol", c.symmetry_tol},
	               {"g_semigroup_tol", c.g_semigroup_tol},
	               {"k_semigroup_tol", c.k_semigroup_tol}};
	j["trace"] = {{"centers", c.trace_centers}, {"radii", c.trace_radii}};
	j["criteria"] = {{"ids", c.criteria},   {"sigma_lo", c.sigma_lo},       {"sigma_hi", c.sigma_hi},
	                 {"sigma_n", c.sigma_n}, {"alpha", c.alpha},             {"beta", c.beta},
	                 {"ell", c.ell},         {"log_variant", c.log_variant}, {"strip_source", c.strip_source}};
	j["dichotomy"] = {{"kappa_lo", c.dichotomy.kappa_lo},
	                  {"kappa_hi", c.dichotomy.kappa_hi},
	                  {"max_bisection", c.dichotomy.max_bisection},
	                  {"max_widen", c.dichotomy.max_widen},
	                  {"ratio", c.dichotomy.target_ratio},
	                  {"refine_check", c.refine_check}};
	return j;
}

inline Json report_json(const CriterionReport& r) {
	Json j;
	j["id"] = r.id;
	Json params = Json::object();
	for (const auto& [k, v] : r.params) params[k] = num(v);
	j["params"] = params;
	j["samples"] = r.samples.size();
	if (r.fit)
		j["fit"] = {{"kind", r.fit_kind}, {"slope", num(r.fit->slope)}, {"band", num(r.fit->band)}, {"intercept", num(r.fit->intercept)},
		            {"samples", r.fit->samples}};
	else
		j["fit"] = nullptr;
	j["predicted"] = r.predicted ? num(*r.predicted) : Json(nullptr);
	j["verdict"] = to_string(r.verdict);
	j["note"] = r.note;
	return j;
}

inline void write_report_csv(const std::filesystem::path& path, const CriterionReport& r) {
	CsvWriter w(path, {"z", "sigma", "lhs", "bound", "ratio"});
	for (const auto& s : r.samples) w.row_strings({point_cell(s.z), fmt(s.sigma), fmt(s.lhs), fmt(s.bound), fmt(s.ratio)});
}

} // namespace mildheat::cli

#endif // MILDHEAT_CLI_OUTPUT_HPP
