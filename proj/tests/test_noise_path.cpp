#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rim/noise_path.hpp"
#include "rim/rng.hpp"
#include "rim/stats.hpp"

namespace rim {
namespace {

TEST(TimeGrid, ContainsZeroWhenSpanning) {
    const TimeGrid g = TimeGrid::span(-1.0, 2.0, 0.5);
    EXPECT_EQ(g.index_of(0.0), 2u);
    EXPECT_EQ(g.n_nodes(), 7u);
    EXPECT_THROW(TimeGrid(-0.25, 0.4, 3), std::invalid_argument);  // no node at 0
    EXPECT_THROW(TimeGrid(0.0, -0.1, 3), std::invalid_argument);
}

TEST(SampleBrownian, PinnedAtOrigin) {
    const TimeGrid g = TimeGrid::span(0.0, 1.0, 0.5);
    const NoisePath p = sample_brownian(g, 99);
    EXPECT_EQ(p.w[0], 0.0);
    const TimeGrid g2 = TimeGrid::span(-2.0, 1.0, 0.25);
    const NoisePath p2 = sample_brownian(g2, 99);
    EXPECT_EQ(p2.w_at(0.0), 0.0);
}

TEST(SampleBrownian, Reproducible) {
    const TimeGrid g = TimeGrid::span(-1.0, 1.0, 0.01);
    const NoisePath a = sample_brownian(g, 7);
    const NoisePath b = sample_brownian(g, 7);
    ASSERT_EQ(a.w.size(), b.w.size());
    for (std::size_t i = 0; i < a.w.size(); ++i) ASSERT_EQ(a.w[i], b.w[i]);
    const NoisePath c = sample_brownian(g, 8);
    EXPECT_NE(a.w[1], c.w[1]);
}

TEST(SampleBrownian, UnitVarianceAtTimeOne) {
    // Var(w(1)) over 10^4 seeds within three standard errors
    const TimeGrid g = TimeGrid::span(0.0, 1.0, 0.05);
    const int n = 10000;
    std::vector<double> w1;
    w1.reserve(n);
    for (int s = 0; s < n; ++s)
        w1.push_back(sample_brownian(g, derive_stream(5150, s, 0)).w.back());
    const double se = std::sqrt(2.0 / n);  // SE of the variance of a unit normal
    EXPECT_NEAR(variance(w1), 1.0, 3.0 * se);
}

TEST(SampleBrownian, BackwardIncrementsIndependentOfForward) {
    const TimeGrid g = TimeGrid::span(-5.0, 5.0, 0.01);
    const int n = 4000;
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
        const NoisePath p = sample_brownian(g, derive_stream(11, s, 0));
        acc += p.w_at(-1.0) * p.w_at(1.0);  // E = 0 for a two-sided field
    }
    EXPECT_NEAR(acc / n, 0.0, 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(DeriveOu, SigmaZeroIsPureDecay) {
    const TimeGrid g = TimeGrid::span(-10.0, 1.0, 0.01);
    NoisePath p = sample_brownian(g, 3);
    derive_ou(p, 0.0, OuInit::ZeroTail);
    for (double z : p.z) ASSERT_EQ(z, 0.0);
}

TEST(DeriveOu, IdentityResidualIsExact) {
    // z(t) - z(0) + int_0^t z - sigma w(t) vanishes to rounding: zint is
    // accumulated through the SDE identity, not by quadrature
    const TimeGrid g = TimeGrid::span(-20.0, 5.0, 0.01);
    NoisePath p = sample_brownian(g, 12);
    derive_ou(p, 0.7, OuInit::Stationary);
    const double z0 = p.z_at(0.0);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        const double res = p.z[i] - z0 + p.zint[i] - 0.7 * p.w[i];
        ASSERT_NEAR(res, 0.0, 1e-12);
    }
}

TEST(DeriveOu, StationaryVariance) {
    // long-path time average of z^2 -> sigma^2/2; SE ~= sigma^2/sqrt(2T)
    const double T = 4000.0;
    const TimeGrid g = TimeGrid::span(0.0, T, 0.02);
    NoisePath p = sample_brownian(g, 21);
    derive_ou(p, 1.0, OuInit::Stationary);
    double s2 = 0.0;
    for (double z : p.z) s2 += z * z;
    s2 /= static_cast<double>(p.z.size());
    EXPECT_NEAR(s2, 0.5, 3.0 / std::sqrt(2.0 * T));
}

TEST(ZAtZero, ZeroPathGivesZero) {
    const TimeGrid g = TimeGrid::span(-40.0, 0.0, 0.01);
    std::vector<double> w(g.n_nodes(), 0.0), z(g.n_nodes(), 0.0);
    NoisePath p = NoisePath::from_arrays(g, w, z, 1.0, 40.0);
    EXPECT_EQ(z_at_zero(p), 0.0);
}

TEST(ZAtZero, LinearPathMatchesClosedForm) {
    // w(s) = s  =>  sigma * int e^s s ds = -sigma
    const TimeGrid g = TimeGrid::span(-40.0, 0.0, 0.001);
    std::vector<double> w(g.n_nodes()), z(g.n_nodes(), 0.0);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) w[i] = g.t(i);
    const double sigma = 0.8;
    NoisePath p = NoisePath::from_arrays(g, w, z, sigma, 40.0);
    EXPECT_NEAR(z_at_zero(p), -sigma, 1e-6);
    EXPECT_FALSE(p.z0_truncation_warning);
}

TEST(ZAtZero, BoundedBySigmaKTildePlusOne) {
    const TimeGrid g = TimeGrid::span(-50.0, 0.0, 0.01);
    for (int s = 0; s < 200; ++s) {
        const NoisePath p =
            make_noise_path(g, derive_stream(777, s, 0), 0.3, OuInit::ZeroTail);
        ASSERT_LE(p.z0_quadrature, 0.3 * (p.k_tilde + 1.0) * (1.0 + 1e-12));
        ASSERT_GE(p.k_tilde, 0.0);
    }
}

TEST(KFunctionals, ZeroPathGivesZeroKTilde) {
    const TimeGrid g = TimeGrid::span(-40.0, 0.0, 0.01);
    std::vector<double> w(g.n_nodes(), 0.0), z(g.n_nodes(), 0.0);
    NoisePath p = NoisePath::from_arrays(g, w, z, 1.0, 40.0);
    EXPECT_EQ(p.k_tilde, 0.0);  // sup of (0 + s) attained at s = 0
    EXPECT_EQ(p.k_pm, 2.0);
}

TEST(KFunctionals, TwoKTildeHasUnitMean) {
    // 2 K~ is standard exponential; check the mean at 3 SE (the full KS
    // test runs in the acceptance suite)
    const TimeGrid g = TimeGrid::span(-50.0, 0.0, 0.01);
    const int n = 800;
    std::vector<double> ks;
    ks.reserve(n);
    for (int s = 0; s < n; ++s)
        ks.push_back(2.0 * make_noise_path(g, derive_stream(31337, s, 0), 0.1).k_tilde);
    EXPECT_NEAR(mean(ks), 1.0, 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(KFunctionals, K2RequiresPositiveSigma) {
    const TimeGrid g = TimeGrid::span(-50.0, 0.0, 0.01);
    const NoisePath p = make_noise_path(g, 5, 0.1);
    EXPECT_THROW(compute_k_functionals(p, 0.0, 0.0, 1.0), std::domain_error);
    const auto kf = compute_k_functionals(p, 0.05, 0.1, 1.0);
    EXPECT_GT(kf.k2, 0.0);
    EXPECT_EQ(kf.k_tilde, p.k_tilde);
}

TEST(ShiftPath, ZeroShiftIsIdentity) {
    const TimeGrid g = TimeGrid::span(-50.0, 2.0, 0.01);
    const NoisePath p = make_noise_path(g, 77, 0.5);
    const NoisePath q = shift_path(p, 0.0);
    for (std::size_t i = 0; i < p.w.size(); ++i) {
        ASSERT_EQ(p.w[i], q.w[i]);
        ASSERT_EQ(p.z[i], q.z[i]);
        ASSERT_EQ(p.zint[i], q.zint[i]);
    }
}

TEST(ShiftPath, ShiftedPathPinnedAndStationary) {
    const TimeGrid g = TimeGrid::span(-55.0, 3.0, 0.01);
    const NoisePath p = make_noise_path(g, 78, 0.5, OuInit::ZeroTail, 50.0);
    const double tsh = 1.5;
    const NoisePath q = shift_path(p, tsh);
    EXPECT_EQ(q.w_at(0.0), 0.0);
    // z is stationary under the shift: z'(0) = z(t_shift)
    EXPECT_EQ(q.z_at(0.0), p.z_at(tsh));
    // theta_t w(s) = w(s+t) - w(t)
    EXPECT_DOUBLE_EQ(q.w_at(-1.0), p.w_at(0.5) - p.w_at(1.5));
    EXPECT_NEAR(q.zint_at(1.0), p.zint_at(2.5) - p.zint_at(1.5), 1e-12);
}

TEST(ShiftPath, WindowUnderflowThrows) {
    const TimeGrid g = TimeGrid::span(-50.0, 2.0, 0.01);
    const NoisePath p = make_noise_path(g, 79, 0.5, OuInit::ZeroTail, 50.0);
    // a backward shift leaves [-tail_T, 0] uncovered
    EXPECT_THROW(shift_path(p, -1.0), std::out_of_range);
    EXPECT_NO_THROW(shift_path(p, 1.0));
}

TEST(Serialization, CsvHasHeaderAndRows) {
    const TimeGrid g = TimeGrid::span(-1.0, 0.0, 0.5);
    const NoisePath p = make_noise_path(g, 4, 0.2);
    std::ostringstream os;
    write_path_csv(p, os);
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("t,w,z\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);  // header + 3 nodes
}

TEST(Serialization, BinaryCacheRoundTrip) {
    const TimeGrid g = TimeGrid::span(-10.0, 1.0, 0.01);
    const NoisePath p = make_noise_path(g, 1234, 0.3);
    const std::string file = std::filesystem::temp_directory_path() / "rim_path_cache.bin";
    write_path_cache(p, file);
    const NoisePath q = read_path_cache(file);
    ASSERT_EQ(p.w.size(), q.w.size());
    for (std::size_t i = 0; i < p.w.size(); ++i) {
        ASSERT_EQ(p.w[i], q.w[i]);
        ASSERT_EQ(p.z[i], q.z[i]);
        ASSERT_EQ(p.zint[i], q.zint[i]);
    }
    EXPECT_EQ(p.sigma, q.sigma);
    EXPECT_EQ(p.seed, q.seed);
    EXPECT_EQ(p.k_tilde, q.k_tilde);  // functionals are re-derived from the seed
    std::remove(file.c_str());
}

TEST(Serialization, BadMagicRejected) {
    const std::string file = std::filesystem::temp_directory_path() / "rim_bad_cache.bin";
    {
        std::ofstream os(file, std::ios::binary);
        os << "NOTAPATH garbage";
    }
    EXPECT_THROW(read_path_cache(file), std::runtime_error);
    std::remove(file.c_str());
}

}  // namespace
}  // namespace rim
