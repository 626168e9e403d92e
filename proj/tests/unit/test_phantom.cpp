#include <gtest/gtest.h>

#include <cmath>

#include "carmsim/error.hpp"
#include "carmsim/phantom.hpp"

using namespace carmsim;

TEST(Phantom, DeterministicPerSeed) {
    const auto a = generate_phantom(11);
    const auto b = generate_phantom(11);
    const auto c = generate_phantom(12);
    EXPECT_EQ(a.volume, b.volume);
    EXPECT_EQ(a.landmarks, b.landmarks);
    EXPECT_NE(a.landmarks, c.landmarks);
}

TEST(Phantom, LandmarksAreAnatomicallyOrdered) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = generate_phantom(seed);
        ASSERT_NO_THROW(p.landmarks.validate_within(p.volume.bounds()));
        const auto z = [&](int i) { return p.landmarks.at(i).position.z(); };
        EXPECT_GT(z(1), z(10));   // skull above T1
        EXPECT_GT(z(10), z(11));  // T1 above sternum
        EXPECT_GT(z(2), z(6));    // shoulder above elbow
        EXPECT_GT(z(6), z(8));    // elbow above wrist
        const double sep = p.landmarks.at(3).position.x() - p.landmarks.at(2).position.x();
        EXPECT_NEAR(sep, 285.0, 20.0 + 2 * 8.0 + 1e-9) << "seed " << seed;
        // Sternum anterior to T1.
        EXPECT_LT(p.landmarks.at(11).position.y(), p.landmarks.at(10).position.y());
    }
}

TEST(Phantom, TissueOrdering) {
    const auto p = generate_phantom(3);
    const auto& v = p.volume;
    // The cranial shell is bone around soft tissue; the corner is air.
    const Vec3 skull = p.landmarks.at(1).position;
    EXPECT_GT(v.sample(skull + Vec3(0, 0, 85)), 0.02);
    EXPECT_NEAR(v.sample(skull), 0.02, 1e-6);
    EXPECT_EQ(v.sample(Vec3(2.0, 2.0, 2.0)), 0.0);
}

TEST(Phantom, RejectsBadConfig) {
    PhantomConfig c;
    c.voxel_mm = 0.0;
    EXPECT_THROW(generate_phantom(1, c), Error);
    c = {};
    c.extent_mm.x() = -5.0;
    EXPECT_THROW(generate_phantom(1, c), Error);
}
