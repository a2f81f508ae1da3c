#ifndef MILDHEAT_DOMAIN_HPP
#define MILDHEAT_DOMAIN_HPP

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"
#include "point.hpp"

namespace mildheat {

enum class DomainKind { WholeSpace, HalfSpace, Interval };

class Domain {
public:
	static Domain whole_space(std::size_t n) { return Domain(DomainKind::WholeSpace, n, 0.0); }
	static Domain half_space(std::size_t n) { return Domain(DomainKind::HalfSpace, n, 0.0); }
	static Domain interval(double length) {
		if (!(length > 0) || !std::isfinite(length)) throw InvalidArgument("interval length must be positive and finite");
		return Domain(DomainKind::Interval, 1, length);
	}

	DomainKind kind() const { return kind_; }
	std::size_t dim() const { return dim_; }
	double length() const { return length_; }
	bool has_boundary() const { return kind_ != DomainKind::WholeSpace; }

	// Membership in the closed domain.
	bool contains(const Point& x) const {
		if (x.dim() != dim_ || !x.finite()) return false;
		switch (kind_) {
		case DomainKind::WholeSpace: return true;
		case DomainKind::HalfSpace: return x.last() >= 0;
		case DomainKind::Interval: return x[0] >= 0 && x[0] <= length_;
		}
		return false;
	}

	void require(const Point& x, const char* what) const {
		if (!contains(x)) throw InvalidArgument(std::string(what) + " " + x.str() + " is not in " + describe());
	}

	double distance(const Point& x) const {
		switch (kind_) {
		case DomainKind::WholeSpace: return std::numeric_limits<double>::infinity();
		case DomainKind::HalfSpace: return x.last();
		case DomainKind::Interval: return std::min(x[0], length_ - x[0]);
		}
		return 0;
	}

	bool on_boundary(const Point& x) const { return has_boundary() && distance(x) == 0; }

	Point project_to_boundary(const Point& x) const {
		Point p = x;
		switch (kind_) {
		case DomainKind::WholeSpace: throw UnsupportedDomain("whole space has no boundary");
		case DomainKind::HalfSpace: p.last() = 0; break;
		case DomainKind::Interval: p[0] = x[0] <= 0.5 * length_ ? 0.0 : length_; break;
		}
		return p;
	}

	// Inner unit normal at a boundary point.
	Point inner_normal(const Point& b) const {
		Point n(dim_);
		switch (kind_) {
		case DomainKind::WholeSpace: throw UnsupportedDomain("whole space has no boundary");
		case DomainKind::HalfSpace: n.last() = 1; break;
		case DomainKind::Interval: n[0] = b[0] <= 0.5 * length_ ? 1.0 : -1.0; break;
		}
		return n;
	}

	// Range of the last coordinate inside the closed domain.
	double last_lo() const { return kind_ == DomainKind::WholeSpace ? -std::numeric_limits<double>::infinity() : 0.0; }
	double last_hi() const {
		return kind_ == DomainKind::Interval ? length_ : std::numeric_limits<double>::infinity();
	}

	std::string describe() const {
		switch (kind_) {
		case DomainKind::WholeSpace: return "WholeSpace(" + std::to_string(dim_) + ")";
		case DomainKind::HalfSpace: return "HalfSpace(" + std::to_string(dim_) + ")";
		case DomainKind::Interval: return "Interval(" + std::to_string(length_) + ")";
		}
		return "?";
	}

private:
	Domain(DomainKind k, std::size_t n, double len) : kind_(k), dim_(n), length_(len) {
		if (n < 1 || n > kMaxDim) throw InvalidArgument("domain dimension must be 1, 2 or 3");
	}
	DomainKind kind_;
	std::size_t dim_;
	double length_;
};

// Critical exponents p_k = 1 + 2/k.
inline double critical_exponent(double k) { return 1.0 + 2.0 / k; }

} // namespace mildheat

#endif // MILDHEAT_DOMAIN_HPP
