#ifndef MILDHEAT_DICHOTOMY_HPP
#define MILDHEAT_DICHOTOMY_HPP

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measure.hpp"
#include "solver.hpp"

namespace mildheat {

struct BisectionStep {
	double kappa = 0;
	SolveStatus status = SolveStatus::Inconclusive;
	std::size_t iterations = 0;
	double sup = 0;
	std::string phase;  // "widen" or "bisect"
};

struct DichotomyResult {
	std::string family;
	Point z;
	double p = 0;
	double kappa_low = 0;   // largest kappa with a converged solve
	double kappa_high = 0;  // smallest kappa whose solve did not converge
	std::string grid_id;
	std::vector<BisectionStep> history;
};

struct DichotomyOptions {
	double kappa_lo = 0.05;
	double kappa_hi = 1.0;
	std::size_t max_bisection = 30;
	std::size_t max_widen = 8;   // factor-4 widenings per end before giving up
	double target_ratio = 1.2;
	PicardOptions picard;
};

// Short description of the grid a problem was solved on.
inline std::string grid_id(const SpaceTimeGrid& g) {
	char buf[160];
	std::snprintf(buf, sizeof buf, "J%zu-M%zu-hmin%.3g-T%.6g", g.n_nodes(), g.n_levels(),
	              g.n_nodes() > 1 ? g.nodes()[1] - g.nodes()[0] : 0.0, g.horizon());
	return buf;
}

// Bisection in log kappa for the threshold of kappa * mu, mu being the unit-scale measure of the problem.
// Solutions are monotone in kappa, so every kappa below a converged one converges. Inconclusive solves count as
// not converged.
inline DichotomyResult dichotomy_sweep(const PicardProblem& pb, double p, const DichotomyOptions& o) {
	if (!(o.kappa_lo > 0) || !(o.kappa_hi > o.kappa_lo) || !std::isfinite(o.kappa_hi))
		throw InvalidArgument("kappa bracket needs 0 < kappa_lo < kappa_hi");
	if (!(o.target_ratio > 1)) throw InvalidArgument("target ratio must exceed 1");
	DichotomyResult res;
	res.p = p;
	res.grid_id = grid_id(pb.grid());
	const auto& fam = pb.measure().family();
	if (fam) {
		res.family = to_string(fam->id);
		res.z = fam->anchor;
	}
	auto run = [&](double kappa, const char* phase) {
		const SolveOutcome out = pb.solve(p, kappa, o.picard);
		res.history.push_back({kappa, out.status, out.iterations, out.history.empty() ? 0.0 : out.history.back().sup, phase});
		return out.status == SolveStatus::Converged;
	};
	double lo = o.kappa_lo, hi = o.kappa_hi;
	std::size_t widen = 0;
	while (!run(lo, "widen")) {
		hi = lo;
		if (++widen > o.max_widen) throw NoBracket("no converged solve after widening the bracket down to kappa = " + std::to_string(lo));
		lo /= 4;
	}
	widen = 0;
	while (run(hi, "widen")) {
		lo = hi;
		if (++widen > o.max_widen) throw NoBracket("no failed solve after widening the bracket up to kappa = " + std::to_string(hi));
		hi *= 4;
	}
	for (std::size_t i = 0; i < o.max_bisection && hi / lo >= o.target_ratio; ++i) {
		const double mid = std::sqrt(lo * hi);
		if (run(mid, "bisect"))
			lo = mid;
		else
			hi = mid;
	}
	res.kappa_low = lo;
	res.kappa_high = hi;
	return res;
}

} // namespace mildheat

#endif // MILDHEAT_DICHOTOMY_HPP
