#ifndef MILDHEAT_POINT_HPP
#define MILDHEAT_POINT_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>

#include "errors.hpp"

namespace mildheat {

inline constexpr std::size_t kMaxDim = 3;

// Small fixed-capacity coordinate vector, dimension 1..3.
class Point {
public:
	Point() = default;
	explicit Point(std::size_t dim) : n_(check(dim)) {}
	Point(std::initializer_list<double> xs) : n_(check(xs.size())) {
		std::size_t i = 0;
		for (double x : xs) c_[i++] = x;
	}

	static Point scalar(double x) { return Point{x}; }

	std::size_t dim() const { return n_; }
	double operator[](std::size_t i) const { return c_[i]; }
	double& operator[](std::size_t i) { return c_[i]; }
	double last() const { return c_[n_ - 1]; }
	double& last() { return c_[n_ - 1]; }

	double norm() const {
		double s = 0;
		for (std::size_t i = 0; i < n_; ++i) s += c_[i] * c_[i];
		return std::sqrt(s);
	}

	bool finite() const {
		for (std::size_t i = 0; i < n_; ++i)
			if (!std::isfinite(c_[i])) return false;
		return true;
	}

	friend bool operator==(const Point& a, const Point& b) {
		if (a.n_ != b.n_) return false;
		for (std::size_t i = 0; i < a.n_; ++i)
			if (a.c_[i] != b.c_[i]) return false;
		return true;
	}

	friend Point operator+(Point a, const Point& b) {
		for (std::size_t i = 0; i < a.n_; ++i) a.c_[i] += b.c_[i];
		return a;
	}
	friend Point operator-(Point a, const Point& b) {
		for (std::size_t i = 0; i < a.n_; ++i) a.c_[i] -= b.c_[i];
		return a;
	}
	friend Point operator*(double s, Point a) {
		for (std::size_t i = 0; i < a.n_; ++i) a.c_[i] *= s;
		return a;
	}

	std::string str() const {
		std::string s = "(";
		for (std::size_t i = 0; i < n_; ++i) {
			if (i) s += ", ";
			s += std::to_string(c_[i]);
		}
		return s + ")";
	}

private:
	static std::size_t check(std::size_t d) {
		if (d < 1 || d > kMaxDim) throw InvalidArgument("point dimension must be 1, 2 or 3");
		return d;
	}
	std::array<double, kMaxDim> c_{};
	std::size_t n_ = 0;
};

inline double squared_distance(const Point& a, const Point& b) {
	double s = 0;
	for (std::size_t i = 0; i < a.dim(); ++i) {
		const double d = a[i] - b[i];
		s += d * d;
	}
	return s;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

inline double dot(const Point& a, const Point& b) {
	double s = 0;
	for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
	return s;
}

} // namespace mildheat

#endif // MILDHEAT_POINT_HPP
