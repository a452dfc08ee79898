#ifndef EBSIM_SPINOR_HPP
#define EBSIM_SPINOR_HPP

#include <cmath>
#include <complex>

namespace ebsim {

using Complex = std::complex<double>;

/// Complex 2-vector. Used unnormalized inside beam-splitter registers and
/// normalized as the message carried by a neutron.
struct Spinor {
    Complex up{};
    Complex down{};

    double norm2() const { return std::norm(up) + std::norm(down); }
    double norm() const { return std::sqrt(norm2()); }

    /// Spinor (e^{i psi1} cos(theta/2), e^{i psi2} sin(theta/2)).
    static Spinor from_bloch(double theta, double psi1, double psi2) {
        return {std::polar(std::cos(theta / 2.0), psi1), std::polar(std::sin(theta / 2.0), psi2)};
    }
    static Spinor spin_up() { return {Complex{1.0, 0.0}, Complex{}}; }
    static Spinor spin_down() { return {Complex{}, Complex{1.0, 0.0}}; }

    Spinor normalized() const {
        const double n = norm();
        return {up / n, down / n};
    }

    friend Spinor operator+(const Spinor& a, const Spinor& b) { return {a.up + b.up, a.down + b.down}; }
    friend Spinor operator*(Complex s, const Spinor& v) { return {s * v.up, s * v.down}; }
    friend Spinor operator*(double s, const Spinor& v) { return {s * v.up, s * v.down}; }
};

/// <a|b>
inline Complex inner(const Spinor& a, const Spinor& b) { return std::conj(a.up) * b.up + std::conj(a.down) * b.down; }

} // namespace ebsim

#endif // EBSIM_SPINOR_HPP
