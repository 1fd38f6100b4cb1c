#ifndef BFLY_RNG_HPP
#define BFLY_RNG_HPP

#include <Eigen/Dense>
#include <cstdint>

namespace bfly {

// Counter-based generator (SplitMix64 finalizer over seed and counter), so
// streams are reproducible across platforms and independent of call order
// between separately seeded instances.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * ++counter_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (-1, 1).
    double next_open() {
        const double u =
            (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        return 2.0 * u - 1.0;
    }

    Eigen::VectorXd vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = next_open();
        return v;
    }

    // Uniform entries normalized to unit l2 norm.
    Eigen::VectorXd unit_vector(Eigen::Index n) {
        Eigen::VectorXd v = vector(n);
        const double norm = v.norm();
        return norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace bfly

#endif
