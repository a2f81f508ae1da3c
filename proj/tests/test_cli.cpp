#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mildheat_cli/run.hpp"

using namespace mildheat;
using namespace mildheat::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
	const auto p = std::filesystem::temp_directory_path() / ("mildheat_cli_test_" + name);
	std::filesystem::remove_all(p);
	return p;
}

std::string slurp(const std::filesystem::path& p) {
	std::ifstream in(p, std::ios::binary);
	std::stringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

std::vector<Json> manifest(const std::filesystem::path& dir) {
	std::vector<Json> out;
	std::ifstream in(dir / "manifest.jsonl");
	std::string line;
	while (std::getline(in, line)) out.push_back(Json::parse(line));
	return out;
}

Json find_record(const std::vector<Json>& m, const std::string& kind) {
	for (const auto& j : m)
		if (j.at("record") == kind) return j;
	return Json();
}

const char* kCoarseMu1 = R"(
[run]
command = dichotomy
[domain]
kind = half_space
dim = 1
[measure]
type = family
family = mu1
anchor = 1.0
[problem]
p = 4
T = 1
[grid]
time_ratio = 1.6
h_min = 1e-3
h_max = 0.1
grading = 0.1
)";

} // namespace

TEST(Config, ParsesEveryField) {
	const RunConfig c = parse_config_text(R"(
[run]
command = criteria
seed = 9
threads = 2
[domain]
kind = interval
length = 2.5
[measure]
type = bump
anchor = 1.0
radius = 0.25
amplitude = 3
mode = lebesgue
[problem]
p = 3
T = 0.5
[grid]
theta = 1e-4
time_ratio = 1.2
h_min = 2e-4
h_max = 0.01
grading = 0.02
extra_times = 0.1, 0.2
[tolerance]
conv_tol = 1e-6
max_iter = 50
[criteria]
ids = cond_1_16, thm13_weighted
sigma_lo = 1e-3
sigma_hi = 0.1
ell = 1
[dichotomy]
kappa_lo = 0.1
kappa_hi = 2
refine_check = true
)");
	EXPECT_EQ(c.command, "criteria");
	EXPECT_EQ(c.seed, 9u);
	EXPECT_EQ(c.threads, 2u);
	EXPECT_EQ(c.domain, "interval");
	EXPECT_EQ(c.length, 2.5);
	EXPECT_EQ(c.measure.mode, "lebesgue");
	EXPECT_EQ(c.grid.T, 0.5);
	EXPECT_EQ(c.grid.extra_times, (std::vector<double>{0.1, 0.2}));
	EXPECT_EQ(c.picard.max_iter, 50u);
	EXPECT_EQ(c.criteria, (std::vector<std::string>{"cond_1_16", "thm13_weighted"}));
	EXPECT_EQ(c.ell, 1);
	EXPECT_TRUE(c.refine_check);
	EXPECT_EQ(c.dichotomy.kappa_hi, 2.0);
	EXPECT_TRUE(validate(c).empty());
}

TEST(Config, ReportsEveryViolation) {
	try {
		parse_config_text("[grid]\ntheta = abc\nh_min = x\n[measure]\nkapa = 1\n[run]\nthreads = -1\n");
		FAIL() << "expected ConfigError";
	} catch (const ConfigError& e) {
		ASSERT_EQ(e.violations.size(), 4u);
		EXPECT_NE(std::string(e.what()).find("grid.theta"), std::string::npos);
		EXPECT_NE(std::string(e.what()).find("measure.kapa: unknown key"), std::string::npos);
	}
	RunConfig c;
	c.command = "bogus";
	c.p = 0.5;
	c.T = -1;
	c.grid.theta = 2;
	c.measure.type = "family";
	c.measure.anchor = {};
	const auto v = validate(c);
	EXPECT_GE(v.size(), 5u);
	auto has = [&](const std::string& key) {
		return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.rfind(key, 0) == 0; });
	};
	for (const char* key : {"run.command", "problem.p", "problem.T", "grid.theta", "measure.anchor"}) EXPECT_TRUE(has(key)) << key;
	std::ostringstream log;
	EXPECT_EQ(run(c, scratch("invalid"), log), kConfigInvalid);
	EXPECT_NE(log.str().find("problem.T"), std::string::npos);
}

TEST(Config, FamilyConstraintsAreChecked) {
	RunConfig c;
	c.measure.type = "family";
	c.measure.family = "mu2";
	c.measure.anchor = {1.0};
	c.p = 3;
	const auto v = validate(c);
	ASSERT_EQ(v.size(), 1u);
	EXPECT_NE(v[0].find("boundary anchor"), std::string::npos);
}

TEST(Run, KernelCheckPasses) {
	RunConfig c;
	c.command = "kernel-check";
	c.kernel_samples = 10;
	const auto dir = scratch("kernel");
	std::ostringstream log;
	ASSERT_EQ(run(c, dir, log), kOk) << log.str();
	const auto m = manifest(dir);
	EXPECT_EQ(m.front().at("record"), "config");
	EXPECT_EQ(m.front().at("schema_version"), kSchemaVersion);
	const Json r = find_record(m, "result");
	EXPECT_TRUE(r.at("pass").get<bool>());
	EXPECT_NEAR(r.at("survival_mass_x1_t025").get<double>(), 0.842701, 1e-6);
	EXPECT_TRUE(std::filesystem::exists(dir / "kernel_check.csv"));
}

TEST(Run, ZeroSolveIsTrivial) {
	RunConfig c;
	c.command = "solve";
	c.grid.h_max = 0.1;
	c.grid.grading = 0.1;
	c.grid.h_min = 1e-3;
	const auto dir = scratch("zero");
	std::ostringstream log;
	ASSERT_EQ(run(c, dir, log), kOk) << log.str();
	const Json r = find_record(manifest(dir), "result");
	EXPECT_EQ(r.at("status"), "Converged");
	EXPECT_EQ(r.at("iterations"), 1);
	EXPECT_EQ(r.at("sup"), 0.0);
}

TEST(Run, CriteriaOnBoundedDensity) {
	RunConfig c;
	c.command = "criteria";
	c.measure.type = "bump";
	c.measure.anchor = {2.0};
	c.measure.radius = 1;
	c.p = 1.5;
	c.criteria = {"cond_1_16", "boundary_mass"};
	const auto dir = scratch("criteria");
	std::ostringstream log;
	// boundary_mass needs p >= 2: reported as an error entry, the other report is still written.
	EXPECT_EQ(run(c, dir, log), kRunFailed);
	ASSERT_TRUE(std::filesystem::exists(dir / "criteria_cond_1_16.csv"));
	std::size_t reports = 0;
	for (const auto& j : manifest(dir))
		if (j.at("record") == "report") {
			++reports;
			if (j.at("id") == "cond_1_16") {
				EXPECT_EQ(j.at("verdict"), "consistent");
			} else {
				EXPECT_TRUE(j.contains("error"));
			}
		}
	EXPECT_EQ(reports, 2u);
	c.criteria = {"cond_1_16"};
	EXPECT_EQ(run(c, scratch("criteria_ok"), log), kOk);
}

TEST(Run, CsvOutputsAreByteIdentical) {
	RunConfig c = parse_config_text(kCoarseMu1);
	c.command = "criteria";
	c.criteria = {"thm12_ball_bound", "sufficient_5_7", "prop52_moments"};
	const auto a = scratch("repro_a"), b = scratch("repro_b");
	std::ostringstream log;
	ASSERT_EQ(run(c, a, log), kOk) << log.str();
	ASSERT_EQ(run(c, b, log), kOk) << log.str();
	std::size_t compared = 0;
	for (const auto& e : std::filesystem::directory_iterator(a))
		if (e.path().extension() == ".csv") {
			EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
			++compared;
		}
	EXPECT_EQ(compared, 4u);
	// The anchor sits at sqrt(T) from the boundary: verdicts must not be driven by the large-sigma end.
	for (const auto& j : manifest(a))
		if (j.at("record") == "report" && j.at("id") != "sufficient_5_7") {
			EXPECT_EQ(j.at("verdict"), "consistent") << j.dump();
		}
}

TEST(Dichotomy, BracketIsValidAndMonotone) {
	const RunConfig c = parse_config_text(kCoarseMu1);
	const Domain d = make_domain(c);
	const MeasureSpec unit = make_measure(c, d, true);
	GridParams gp = c.grid;
	const PicardProblem pb(unit, std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::build(d, unit, gp)));
	DichotomyOptions o;
	const DichotomyResult r = dichotomy_sweep(pb, 4.0, o);
	EXPECT_LT(r.kappa_low, r.kappa_high);
	EXPECT_LT(r.kappa_high / r.kappa_low, 1.2);
	EXPECT_EQ(r.family, "mu1");
	for (const auto& s : r.history) {
		if (s.kappa <= r.kappa_low) {
			EXPECT_EQ(s.status, SolveStatus::Converged) << s.kappa;
		}
		if (s.kappa >= r.kappa_high) {
			EXPECT_EQ(s.status, SolveStatus::Diverged) << s.kappa;
		}
	}
	DichotomyOptions zero;
	zero.kappa_lo = 0;
	zero.kappa_hi = 0;
	EXPECT_THROW(dichotomy_sweep(pb, 4.0, zero), InvalidArgument);
	DichotomyOptions tiny;
	tiny.kappa_lo = 1e-4;
	tiny.kappa_hi = 2e-4;
	tiny.max_widen = 1;
	EXPECT_THROW(dichotomy_sweep(pb, 4.0, tiny), NoBracket);
}

TEST(Run, DichotomyWritesHistory) {
	RunConfig c = parse_config_text(kCoarseMu1);
	const auto dir = scratch("dichotomy");
	std::ostringstream log;
	ASSERT_EQ(run(c, dir, log), kOk) << log.str();
	const Json r = find_record(manifest(dir), "result");
	EXPECT_LT(r.at("kappa_low").get<double>(), r.at("kappa_high").get<double>());
	EXPECT_LT(r.at("ratio").get<double>(), 1.2);
	const std::string csv = slurp(dir / "dichotomy.csv");
	EXPECT_EQ(csv.rfind("grid,phase,kappa,status,iterations,sup\n", 0), 0u);
	c.dichotomy.kappa_lo = 0;
	c.dichotomy.kappa_hi = 0;
	EXPECT_EQ(run(c, scratch("dichotomy_bad"), log), kConfigInvalid);
}
