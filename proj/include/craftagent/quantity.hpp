#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace craftagent {

// Exact non-negative-or-signed rational, always kept in lowest terms with den > 0.
class Quantity {
public:
    constexpr Quantity() = default;
    constexpr Quantity(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
    Quantity(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_integer() const { return den_ == 1; }
    bool positive() const { return num_ > 0; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Quantity operator+(const Quantity& a, const Quantity& b) {
        std::int64_t g = std::gcd(a.den_, b.den_);
        return Quantity(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
    }
    friend Quantity operator-(const Quantity& a, const Quantity& b) {
        return a + Quantity(-b.num_, b.den_);
    }
    friend Quantity operator*(const Quantity& a, const Quantity& b) {
        return Quantity(a.num_ * b.num_, a.den_ * b.den_);
    }
    Quantity& operator+=(const Quantity& o) { return *this = *this + o; }
    Quantity& operator-=(const Quantity& o) { return *this = *this - o; }

    friend bool operator==(const Quantity& a, const Quantity& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Quantity& a, const Quantity& b) {
        // cross-multiplication in 128 bits so large denominators cannot overflow
        __int128 l = static_cast<__int128>(a.num_) * b.den_;
        __int128 r = static_cast<__int128>(b.num_) * a.den_;
        if (l < r) return std::strong_ordering::less;
        if (l > r) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    // "8.0", "0.5", "0.3" (one decimal, half away from zero)
    std::string one_decimal() const {
        __int128 scaled = static_cast<__int128>(num_) * 10;
        __int128 q = scaled / den_;
        __int128 r = scaled % den_;
        if (r < 0) r = -r;
        if (2 * r >= den_) q += (num_ < 0 ? -1 : 1);
        bool neg = q < 0;
        if (neg) q = -q;
        long long whole = static_cast<long long>(q / 10);
        int frac = static_cast<int>(q % 10);
        return (neg ? "-" : "") + std::to_string(whole) + "." + std::to_string(frac);
    }

    // "8" when whole, one decimal otherwise
    std::string compact() const {
        if (den_ == 1) return std::to_string(num_);
        return one_decimal();
    }

    // Exact serialization: "3" or "1/3".
    std::string exact() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    // Accepts "3", "3.25", "-1.5", "1/3".
    static Quantity parse(std::string_view s) {
        auto bad = [&] { return std::invalid_argument("not a quantity: '" + std::string(s) + "'"); };
        if (s.empty()) throw bad();
        if (auto slash = s.find('/'); slash != std::string_view::npos) {
            return Quantity(parse_int(s.substr(0, slash), bad), parse_int(s.substr(slash + 1), bad));
        }
        auto dot = s.find('.');
        if (dot == std::string_view::npos) return Quantity(parse_int(s, bad));
        std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
        if (fp.empty() || fp.size() > 9) throw bad();
        bool neg = !ip.empty() && ip[0] == '-';
        std::int64_t whole = (ip.empty() || ip == "-") ? 0 : parse_int(ip, bad);
        std::int64_t den = 1;
        for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
        std::int64_t frac = parse_int(fp, bad);
        if (frac < 0) throw bad();
        std::int64_t mag = (whole < 0 ? -whole : whole) * den + frac;
        return Quantity(neg ? -mag : mag, den);
    }

private:
    template <class F>
    static std::int64_t parse_int(std::string_view s, F&& bad) {
        if (s.empty()) throw bad();
        std::size_t i = 0;
        bool neg = false;
        if (s[0] == '-' || s[0] == '+') {
            neg = s[0] == '-';
            i = 1;
        }
        if (i == s.size()) throw bad();
        std::int64_t v = 0;
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw bad();
            if (v > (INT64_MAX - 9) / 10) throw bad();
            v = v * 10 + (s[i] - '0');
        }
        return neg ? -v : v;
    }

    void normalize() {
        if (den_ == 0) throw std::invalid_argument("quantity with zero denominator");
        if (den_ < 0) {
            den_ = -den_;
            num_ = -num_;
        }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline Quantity max(const Quantity& a, const Quantity& b) { return a < b ? b : a; }

}  // namespace craftagent
