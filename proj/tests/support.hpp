#pragma once

#include "coalsec/geometry.hpp"
#include "coalsec/simulation.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace coalsec::testing {

inline NetworkState make_state(std::vector<Vec2> users, std::vector<Vec2> destinations,
                               std::vector<Vec2> eavesdroppers, RadioParams radio = {})
{
    NetworkState s;
    s.user_positions = std::move(users);
    s.destination_positions = std::move(destinations);
    s.eavesdropper_positions = std::move(eavesdroppers);
    s.radio = radio;
    s.assignment = assign_closest_destination(s);
    return s;
}

/// Default-parameter deployment of n users in a square of the given side.
inline NetworkState random_state(std::uint64_t seed, std::size_t n, std::size_t k = 2,
                                 double side = 2500.0, std::size_t m = 2)
{
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.num_users = n;
    cfg.num_eavesdroppers = k;
    cfg.num_destinations = m;
    cfg.area_side_m = side;
    return deploy_random(cfg);
}

inline CVector random_cvector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0)
{
    std::normal_distribution<double> g(0.0, scale);
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = {g(rng), g(rng)};
    return v;
}

inline CMatrix random_cmatrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols)
{
    CMatrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        m.col(c) = random_cvector(rng, rows);
    return m;
}

/// Uniform point on the sphere of squared radius `power` inside span(Z).
inline CVector sample_feasible(std::mt19937_64& rng, const CMatrix& z, double power)
{
    CVector v = random_cvector(rng, z.cols());
    v *= std::sqrt(power) / v.norm();
    return z * v;
}

inline double relative_gap(double a, double b)
{
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace coalsec::testing
