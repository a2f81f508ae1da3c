#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mildheat/measure.hpp"

using namespace mildheat;

namespace {

double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
	const double n = static_cast<double>(xs.size());
	double sx = 0, sy = 0, sxx = 0, sxy = 0;
	for (std::size_t i = 0; i < xs.size(); ++i) {
		const double x = std::log(xs[i]), y = std::log(ys[i]);
		sx += x;
		sy += y;
		sxx += x * x;
		sxy += x * y;
	}
	return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> sigma_sweep(double lo, double hi, int n) {
	std::vector<double> s;
	for (int i = 0; i < n; ++i) s.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
	return s;
}

Point anchor_at_height(std::size_t n, double h) {
	Point z(n);
	z.last() = h;
	return z;
}

} // namespace

TEST(Measure, FamilyDensityValues) {
	const auto d = Domain::half_space(1);
	const auto mu = make_family({FamilyId::Mu1, Point{1.0}, 4.0, 1.0}, d);
	ASSERT_TRUE(mu.interior());
	EXPECT_EQ(mu.interior()->mode, WeightMode::DistanceWeighted);
	const double expected = 1.1 * std::pow(0.1, -2.0 / 3.0);
	EXPECT_NEAR(mu.interior_density(Point{1.1}) * d.distance(Point{1.1}), expected, 1e-12 * expected);
	EXPECT_EQ(mu.interior_density(Point{2.5}), 0.0);

	const auto zero = make_family({FamilyId::Mu1, Point{1.0}, 4.0, 0.0}, d);
	EXPECT_EQ(ball_mass(zero, d, Point{1.0}, 0.5), 0.0);
	EXPECT_TRUE(zero.is_zero());

	// For N = 1 the boundary-critical exponent is p_2 = 2.
	const auto mu2 = make_family({FamilyId::Mu2, Point{0.0}, 2.0, 1.0}, d);
	EXPECT_DOUBLE_EQ(mu2.interior()->singular->profile.log_power, 2.0);
	EXPECT_DOUBLE_EQ(mu2.interior()->singular->profile.exponent, 2.0);
	const double r = 0.3;
	EXPECT_NEAR(mu2.interior_density(Point{r}), std::pow(r, -2.0) / std::pow(std::log(std::numbers::e + 1 / r), 2.0), 1e-14);

	const auto mu1c = make_family({FamilyId::Mu1, Point{0.0, 2.0}, 2.0, 1.0}, Domain::half_space(2));
	EXPECT_DOUBLE_EQ(mu1c.interior()->singular->profile.exponent, 2.0);
	EXPECT_DOUBLE_EQ(mu1c.interior()->singular->profile.log_power, 2.0);

	const auto mu3 = make_family({FamilyId::Mu3, Point{0.0, 0.0}, 1.8, 2.0}, Domain::half_space(2));
	EXPECT_FALSE(mu3.interior());
	ASSERT_TRUE(mu3.boundary());
	EXPECT_NEAR(mu3.boundary_density(Point{0.5, 0.0}), 2.0 * std::pow(0.5, -0.5), 1e-14);
}

TEST(Measure, FamilyValidation) {
	const auto h1 = Domain::half_space(1), h2 = Domain::half_space(2);
	EXPECT_THROW(make_family({FamilyId::Mu3, Point{0.0}, 1.9, 1.0}, h1), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu1, Point{1.0}, 2.9, 1.0}, h1), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu1, Point{0.0}, 4.0, 1.0}, h1), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu2, Point{0.5}, 4.0, 1.0}, h1), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu2, Point{0.0}, 1.9, 1.0}, h1), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu3, Point{0.0, 0.0}, 2.0, 1.0}, h2), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu3, Point{0.0, 0.0}, 1.6, 1.0}, h2), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu3, Point{0.0, 1.0}, 1.8, 1.0}, h2), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu1, Point{1.0}, 4.0, -1.0}, h1), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu1, Point{1.0}, 4.0, 1.0}, Domain::whole_space(1)), InvalidFamily);
	EXPECT_THROW(make_family({FamilyId::Mu1, Point{-1.0}, 4.0, 1.0}, h1), InvalidFamily);
	EXPECT_NO_THROW(make_family({FamilyId::Mu1, Point{1.0}, 3.0, 1.0}, h1));
	EXPECT_NO_THROW(make_family({FamilyId::Mu1, Point{0.5}, 4.0, 1.0}, Domain::interval(2.0)));
	EXPECT_THROW(MeasureSpec().add_atom(Point{1.0}, -1.0), InvalidArgument);
	EXPECT_THROW(ball_mass(MeasureSpec(), h1, Point{1.0}, 0.0), InvalidArgument);
	EXPECT_THROW(ball_mass(MeasureSpec(), h1, Point{-1.0}, 1.0), InvalidArgument);
}

TEST(Measure, BallMassExamples) {
	const auto d = Domain::half_space(1);
	MeasureSpec atom;
	atom.add_atom(Point{2.0}, 3.0);
	for (double s : {0.01, 1.0, 100.0}) EXPECT_DOUBLE_EQ(ball_mass(atom, d, Point{2.0}, s), 3.0);
	// Closed ball: an atom on the sphere counts.
	EXPECT_DOUBLE_EQ(ball_mass(atom, d, Point{1.5}, 0.5), 3.0);
	EXPECT_DOUBLE_EQ(ball_mass(atom, d, Point{1.5}, 0.4999), 0.0);

	const auto mu3 = make_family({FamilyId::Mu3, Point{0.0, 0.0}, 1.8, 1.0}, Domain::half_space(2));
	EXPECT_EQ(ball_mass(mu3, Domain::half_space(2), Point{0.2, 0.5}, 0.4), 0.0);
}

TEST(Measure, Mu1BallMassAgainstMidpointOracle) {
	// r = u^3 removes the r^{-2/3} singularity; midpoint rule on the smooth remainder.
	const double sigma = 0.1;
	const int n = 200000;
	const double umax = std::cbrt(sigma), h = umax / n;
	double oracle = 0;
	for (int i = 0; i < n; ++i) {
		const double u = (i + 0.5) * h;
		const double r = u * u * u;
		oracle += ((1 + r) + (1 - r)) * 3.0 * h;
	}
	const auto d = Domain::half_space(1);
	const auto mu = make_family({FamilyId::Mu1, Point{1.0}, 4.0, 1.0}, d);
	const double m = ball_mass(mu, d, Point{1.0}, sigma);
	EXPECT_NEAR(m, oracle, 1e-9 * oracle);
	EXPECT_NEAR(m, 6 * std::cbrt(sigma), 1e-9);

	// Off-centre ball [0.95, 1.15]: y = 1 - r on the left, 1 + r on the right.
	const double zc = 1.05, s2 = 0.1;
	double off = 0;
	for (double side : {-1.0, 1.0}) {
		const double len = side < 0 ? 1.0 - (zc - s2) : zc + s2 - 1.0;
		const double um = std::cbrt(len), hh = um / n;
		for (int i = 0; i < n; ++i) {
			const double u = (i + 0.5) * hh;
			off += (1 + side * u * u * u) * 3.0 * hh;
		}
	}
	const double m2 = ball_mass(mu, d, Point{zc}, s2);
	EXPECT_NEAR(m2, off, 1e-9 * off);
}

TEST(Measure, WeightedBallIntegralExamples) {
	const auto d = Domain::half_space(1);
	MeasureSpec atom;
	atom.add_atom(Point{1.0}, 5.0);
	EXPECT_DOUBLE_EQ(weighted_ball_integral(atom, d, Point{1.0}, 1.0), 2.5);

	const auto d2 = Domain::half_space(2);
	const auto mu3 = make_family({FamilyId::Mu3, Point{0.0, 0.0}, 1.8, 1.0}, d2);
	for (double s : {1e-4, 1e-2, 0.25}) {
		const double surface = ball_mass(mu3, d2, Point{0.0, 0.0}, std::sqrt(s));
		EXPECT_NEAR(weighted_ball_integral(mu3, d2, Point{0.0, 0.0}, s), surface / std::sqrt(s), 1e-9 * surface / std::sqrt(s));
		// Surface integral of |x|^{-1/2} over (-r, r) is 4 sqrt(r).
		EXPECT_NEAR(surface, 4 * std::pow(s, 0.25), 1e-8);
	}
}

TEST(Measure, WeightedBallIntegralSlopeAtInteriorAnchor) {
	// For s much smaller than d(z)^2 the weight 1/(d+sqrt s) is close to 1/d(z), so the slope in s is (N - a)/2.
	const auto d = Domain::half_space(1);
	const double p = 4.0, a = 2 / (p - 1);
	const auto mu = make_family({FamilyId::Mu1, Point{1.0}, p, 1.0}, d);
	std::vector<double> ss = sigma_sweep(1e-8, 1e-4, 9), vals, oracle;
	for (double s : ss) {
		vals.push_back(weighted_ball_integral(mu, d, Point{1.0}, s));
		// Brute force: r = u^3, midpoint on both sides.
		const double rs = std::sqrt(s), um = std::cbrt(rs);
		const int n = 20000;
		double acc = 0;
		for (int i = 0; i < n; ++i) {
			const double u = (i + 0.5) * um / n, r = u * u * u;
			acc += (((1 + r) / (1 + r + rs)) + ((1 - r) / (1 - r + rs))) * 3.0 * um / n;
		}
		oracle.push_back(acc);
	}
	for (std::size_t i = 0; i < ss.size(); ++i) EXPECT_NEAR(vals[i], oracle[i], 1e-7 * oracle[i]);
	EXPECT_NEAR(slope(ss, vals), (1 - a) / 2, 0.01);
}

TEST(Measure, ScaleIdentities) {
	const auto d = Domain::half_space(2);
	auto mu = make_family({FamilyId::Mu1, Point{0.0, 1.0}, 3.0, 1.0}, d);
	mu.add_atom(Point{0.3, 1.2}, 0.7);
	const Point z{0.1, 1.1};
	const double base = ball_mass(mu, d, z, 0.4);
	EXPECT_DOUBLE_EQ(ball_mass(scale(mu, 1.0), d, z, 0.4), base);
	EXPECT_NEAR(ball_mass(scale(mu, 2.0), d, z, 0.4), 2 * base, 1e-12 * base);
	EXPECT_NEAR(ball_mass(scale(scale(mu, 1.5), 3.0), d, z, 0.4), ball_mass(scale(mu, 4.5), d, z, 0.4), 1e-12 * base);
	EXPECT_THROW(scale(mu, -1.0), InvalidArgument);
}

TEST(Measure, FamilyExponentSlopes) {
	const auto sig = sigma_sweep(1e-3, 1e-1, 7);
	struct Case {
		FamilyId id;
		std::size_t n;
		double p;
		double expected;
	};
	std::vector<Case> cases;
	for (std::size_t n : {1, 2, 3}) {
		const double pN = critical_exponent(double(n)), pN1 = critical_exponent(double(n + 1));
		for (double p : {pN + 0.5, 4.0}) cases.push_back({FamilyId::Mu1, n, p, n - 2 / (p - 1)});
		for (double p : {pN1 + 0.3, 4.0}) cases.push_back({FamilyId::Mu2, n, p, n + 1 - 2 / (p - 1)});
		if (n >= 2) cases.push_back({FamilyId::Mu3, n, 0.5 * (pN1 + 2), n + 1 - 2 / (0.5 * (pN1 + 2) - 1)});
	}
	for (const auto& c : cases) {
		const auto d = Domain::half_space(c.n);
		const Point z = c.id == FamilyId::Mu1 ? anchor_at_height(c.n, 1.0) : anchor_at_height(c.n, 0.0);
		const auto mu = make_family({c.id, z, c.p, 1.0}, d);
		std::vector<double> m;
		for (double s : sig) m.push_back(ball_mass(mu, d, z, s));
		EXPECT_NEAR(slope(sig, m), c.expected, 0.05) << to_string(c.id) << " N=" << c.n << " p=" << c.p;
	}
}

TEST(Measure, LogCriticalSandwich) {
	for (std::size_t n : {1, 2, 3}) {
		const auto d = Domain::half_space(n);
		const Point z = anchor_at_height(n, 1.0);
		const double pN = critical_exponent(double(n));
		const auto mu = make_family({FamilyId::Mu1, z, pN, 1.0}, d);
		double lo = INFINITY, hi = 0;
		for (double s : sigma_sweep(1e-8, 1e-1, 8)) {
			const double q = ball_mass(mu, d, z, s) * std::pow(log_weight(s), n / 2.0) / d.distance(z);
			lo = std::min(lo, q);
			hi = std::max(hi, q);
		}
		EXPECT_GT(lo, 0) << n;
		EXPECT_TRUE(std::isfinite(hi)) << n;
		EXPECT_LT(hi / lo, 2.0) << n;
	}
}

TEST(Measure, MonotoneInSigmaRandomised) {
	std::mt19937_64 rng(20240611);
	std::uniform_real_distribution<double> U(0, 1);
	const auto d = Domain::half_space(2);
	for (int trial = 0; trial < 12; ++trial) {
		const double p = 2.0 + 2 * U(rng);
		auto mu = make_family({FamilyId::Mu1, Point{U(rng) - 0.5, 0.5 + U(rng)}, p, 0.1 + U(rng)}, d);
		mu.add_atom(Point{2 * U(rng) - 1, 2 * U(rng)}, 0.1 + U(rng));
		const Point z{U(rng) - 0.5, 2 * U(rng)};
		double prev = 0;
		for (double s = 0.05; s < 2.5; s *= 1.6) {
			const double m = ball_mass(mu, d, z, s, measure_tolerance(1e-10));
			EXPECT_GE(m, prev * (1 - 1e-9)) << trial << " sigma " << s;
			prev = m;
		}
	}
}

TEST(Measure, AtomAdditivityRandomised) {
	std::mt19937_64 rng(7);
	std::uniform_real_distribution<double> U(0, 1);
	for (int trial = 0; trial < 200; ++trial) {
		const std::size_t n = 1 + trial % 3;
		const auto d = Domain::half_space(n);
		Point a(n), b(n), z(n);
		for (std::size_t i = 0; i < n; ++i) {
			a[i] = 4 * U(rng) - 2;
			b[i] = 4 * U(rng) - 2;
			z[i] = 4 * U(rng) - 2;
		}
		a.last() = std::abs(a.last());
		b.last() = std::abs(b.last());
		z.last() = std::abs(z.last());
		const double ma = 0.1 + U(rng), mb = 0.1 + U(rng), s = 3 * U(rng) + 0.01;
		MeasureSpec both, only_a, only_b;
		both.add_atom(a, ma).add_atom(b, mb);
		only_a.add_atom(a, ma);
		only_b.add_atom(b, mb);
		EXPECT_DOUBLE_EQ(ball_mass(both, d, z, s), ball_mass(only_a, d, z, s) + ball_mass(only_b, d, z, s));
		const double expect = (distance(a, z) <= s ? ma : 0) + (distance(b, z) <= s ? mb : 0);
		EXPECT_DOUBLE_EQ(ball_mass(both, d, z, s), expect);
	}
}

TEST(Measure, IntervalDomainClipsToBothEnds) {
	const auto d = Domain::interval(1.0);
	const auto mu = make_family({FamilyId::Mu1, Point{0.5}, 4.0, 1.0}, d);
	// Support is all of [0, 1]; d(y) = min(y, 1-y).
	const int n = 200000;
	const double um = std::cbrt(0.5);
	double oracle = 0;
	for (int i = 0; i < n; ++i) {
		const double u = (i + 0.5) * um / n, r = u * u * u;
		oracle += 2 * (0.5 - r) * 3.0 * um / n;
	}
	EXPECT_NEAR(ball_mass(mu, d, Point{0.5}, 5.0), oracle, 1e-9);
}

TEST(Measure, TabulatedDensities) {
	const auto t1 = parse_density_table("x,rho\n0,1\n1,2\n2,0\n", 1);
	const auto mu = make_tabulated(t1, WeightMode::Lebesgue);
	const auto d = Domain::half_space(1);
	EXPECT_NEAR(ball_mass(mu, d, Point{1.0}, 1.0), 3.0, 1e-10);
	EXPECT_NEAR(ball_mass(mu, d, Point{1.0}, 0.5), 1.5, 1e-10);
	EXPECT_NEAR(ball_mass(mu, d, Point{0.0}, 0.25), 0.25, 1e-10);

	const auto t2 = parse_density_table("0,1,1\n1,1,3\n0,2,5\n1,2,7\n0,3,0\n1,3,0\n", 2);
	EXPECT_EQ(t2(Point{0.5, 1.5}), 1.0);
	EXPECT_EQ(t2(Point{0.5, 2.5}), 5.0);
	EXPECT_EQ(t2(Point{0.5, 3.5}), 0.0);
	const auto mu2 = make_tabulated(t2, WeightMode::Lebesgue);
	// The row at x = 1 is the closing edge, so only x in [0, 1) carries mass: 1 + 5.
	EXPECT_NEAR(ball_mass(mu2, Domain::half_space(2), Point{0.5, 2.0}, 5.0), 6.0, 1e-7);

	EXPECT_THROW(parse_density_table("0,1\n1,-1\n", 1), InvalidArgument);
	EXPECT_THROW(parse_density_table("0,1,1\n1,1,3\n0,2,5\n", 2), InvalidArgument);
	EXPECT_THROW(parse_density_table("0,1\n1,x\n", 1), InvalidArgument);
	EXPECT_THROW(parse_density_table("", 1), InvalidArgument);
}

TEST(Measure, BumpMass) {
	// Mass of exp(1 - 1/(1-x^2)) on (-1, 1), frozen from mpmath.
	const double kBump1 = 1.20690032243787618;
	const auto mu = make_bump(Point{3.0}, 1.0, 1.0, WeightMode::Lebesgue);
	EXPECT_NEAR(ball_mass(mu, Domain::half_space(1), Point{3.0}, 2.0), kBump1, 1e-9);
}
