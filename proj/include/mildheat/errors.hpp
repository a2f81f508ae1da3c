#ifndef MILDHEAT_ERRORS_HPP
#define MILDHEAT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mildheat {

class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
	using Error::Error;
};

class UnsupportedDomain : public Error {
public:
	using Error::Error;
};

class InvalidFamily : public Error {
public:
	using Error::Error;
};

class InvalidResolution : public Error {
public:
	using Error::Error;
};

// Series or image sum could not reach the requested tolerance within budget.
class TruncationFailure : public Error {
public:
	TruncationFailure(const std::string& what, double achieved)
		: Error(what), achieved_bound(achieved) {}
	double achieved_bound;
};

// Adaptive quadrature ran out of budget. The partial estimate is kept.
class QuadratureFailure : public Error {
public:
	QuadratureFailure(const std::string& what, double value, double error, std::size_t evals)
		: Error(what), partial_value(value), partial_error(error), evaluations(evals) {}
	double partial_value;
	double partial_error;
	std::size_t evaluations;
};

class NoBracket : public Error {
public:
	using Error::Error;
};

class ConfigError : public Error {
public:
	explicit ConfigError(std::vector<std::string> problems)
		: Error(join(problems)), violations(std::move(problems)) {}
	std::vector<std::string> violations;

private:
	static std::string join(const std::vector<std::string>& v) {
		std::string s = "invalid configuration";
		for (const auto& p : v) s += "; " + p;
		return s;
	}
};

} // namespace mildheat

#endif // MILDHEAT_ERRORS_HPP
